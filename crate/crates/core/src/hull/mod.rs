//! Least concave majorants of labelled sample points.
//!
//! In T3 the hull is exact ([`ConcavePWL1D`]); in T4 it is approximated by
//! skeleton iteration ([`Hull2D`]). Every hull vertex carries its value as a
//! convex combination of the input values ([`Coef`]) so callers can
//! differentiate integrals with respect to `y`.

mod hull3d;
mod lp;
mod one_d;
pub mod planar;
mod two_d;

pub use lp::{solve_simplex_lp, LpOutcome};
pub use one_d::{concave_hull_1d, origin_value_1d, ConcavePWL1D};
pub use two_d::{hull_2d, origin_bounds_lp, Hull2D, HullOptions, OrthantHull};

use serde::{Deserialize, Serialize};

use crate::treespace::TreePoint;
use crate::Scalar;

/// Concavity class of the majorant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    LogConcave,
    /// Concave on each half-line with a relaxed condition at the origin (T3 only).
    Bent,
}

/// Sample location with its log-density value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledPoint<T: Scalar> {
    pub x: TreePoint<T>,
    pub y: T,
}

impl<T: Scalar> LabeledPoint<T> {
    pub fn new(x: TreePoint<T>, y: T) -> Self {
        LabeledPoint { x, y }
    }
}

/// Sparse convex combination of input values: value = Σ c_i y_i.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Coef<T>(pub Vec<(u32, T)>);

impl<T: Scalar> Coef<T> {
    pub fn unit(i: usize) -> Self {
        Coef(vec![(i as u32, T::one())])
    }

    /// `a·x + b·y`, merged by index.
    pub fn mix(a: T, x: &Coef<T>, b: T, y: &Coef<T>) -> Self {
        let mut out = Vec::with_capacity(x.0.len() + y.0.len());
        let (mut i, mut j) = (0, 0);
        while i < x.0.len() || j < y.0.len() {
            let take_x = j >= y.0.len() || (i < x.0.len() && x.0[i].0 < y.0[j].0);
            let take_y = i >= x.0.len() || (j < y.0.len() && y.0[j].0 < x.0[i].0);
            if take_x {
                out.push((x.0[i].0, a * x.0[i].1));
                i += 1;
            } else if take_y {
                out.push((y.0[j].0, b * y.0[j].1));
                j += 1;
            } else {
                out.push((x.0[i].0, a * x.0[i].1 + b * y.0[j].1));
                i += 1;
                j += 1;
            }
        }
        out.retain(|(_, c)| !c.is_zero());
        Coef(out)
    }

    /// Σ w_k x_k over several combinations.
    pub fn combine(parts: &[(T, &Coef<T>)]) -> Self {
        let mut acc = Coef(Vec::new());
        for (w, c) in parts {
            acc = Coef::mix(T::one(), &acc, *w, c);
        }
        acc
    }

    pub fn eval(&self, y: &[T]) -> T {
        self.0.iter().map(|&(i, c)| c * y[i as usize]).sum()
    }

    /// Adds `scale · c_i` into `grad[i]`.
    pub fn scatter(&self, scale: T, grad: &mut [T]) {
        for &(i, c) in &self.0 {
            grad[i as usize] = grad[i as usize] + scale * c;
        }
    }
}
