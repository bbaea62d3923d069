//! Log-concave maximum likelihood density estimation on the phylogenetic tree
//! spaces T3 and T4.
//!
//! The geometric layers ([`treespace`], [`hull`], [`integrate`]) are generic
//! over the [`Scalar`] type; estimation, reference densities and clustering
//! work in `f64`. Concrete aliases for the common `f64` instantiation are
//! exported at the crate root.

pub mod clustering;
pub mod error;
pub mod hull;
pub mod integrate;
pub mod mle;
pub mod refdensities;
pub mod scalar;
pub mod treespace;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use treespace::{OrthantId, Space};

pub type TreePoint = treespace::TreePoint<f64>;
pub type Geodesic = treespace::Geodesic<f64>;
