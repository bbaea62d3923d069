//! Reference densities with known shape, their samplers, exterior
//! derivatives on T3, the three-lineage coalescent density, and a
//! kernel density estimator.

mod kde;
mod sampler;

use std::fmt;
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{grid_integrate, Density, GridSpec};
use crate::treespace::distance_unchecked;
use crate::{OrthantId, Space, TreePoint};

pub use kde::{default_bandwidth, kde_eval, kde_fit, KdeModel, KERNEL_CUTOFF};
use sampler::Sampler;

/// Quadrants carrying Case 4.
pub const CASE4_SUPPORT: [(u8, u8); 6] = [(0, 1), (1, 6), (6, 8), (3, 8), (3, 4), (0, 4)];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoalescentParams {
    /// Internal edge length of the species tree, in coalescent units.
    pub t: f64,
}

impl CoalescentParams {
    pub fn new(t: f64) -> Result<Self> {
        if t > 0.0 && t.is_finite() {
            Ok(CoalescentParams { t })
        } else {
            Err(Error::OutOfRange(format!("coalescent T = {t}")))
        }
    }

    /// P(gene tree topology = u_{k+1}).
    pub fn topology_probability(&self, k: usize) -> f64 {
        let e = (-self.t).exp();
        if k == 0 {
            1.0 - 2.0 / 3.0 * e
        } else {
            e / 3.0
        }
    }
}

/// Joint density of gene tree topology `topology` (0 = matches the species
/// tree) and internal edge length `x` for three lineages.
pub fn coalescent_density(params: &CoalescentParams, topology: usize, x: f64) -> Result<f64> {
    if topology > 2 {
        return Err(Error::InvalidOrthant(format!("topology {topology}")));
    }
    if !(x >= 0.0) {
        return Err(Error::OutOfRange(format!("edge length {x}")));
    }
    let t = params.t;
    Ok(if topology == 0 {
        -(-x - t).exp() / 6.0 + 0.5 * (-x + t - 2.0 * (t - x).max(0.0)).exp()
    } else {
        (-t - x).exp() / 3.0
    })
}

/// Density of the conditional edge length given the topology.
pub fn coalescent_conditional(params: &CoalescentParams, topology: usize, x: f64) -> Result<f64> {
    Ok(coalescent_density(params, topology, x)? / params.topology_probability(topology))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefKind {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5Brownian,
    Case6Coalescent,
    G1,
    G2,
    Mixture(Vec<(f64, ReferenceDensity)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefParams {
    /// Distance of the centre from the origin along ray 0 (cases 1, 2, 5).
    pub x0: f64,
    /// Diffusion time of case 5.
    pub t: f64,
    /// Species-tree edge length of case 6.
    pub coalescent: CoalescentParams,
}

impl Default for RefParams {
    fn default() -> Self {
        RefParams { x0: 1.0, t: 5.0, coalescent: CoalescentParams { t: 1.0 } }
    }
}

/// A closed-form density on T3 or T4, normalized by grid quadrature.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "RefJson", into = "RefJson")]
pub struct ReferenceDensity {
    kind: RefKind,
    params: RefParams,
    space: Space,
    normalizer: OnceLock<f64>,
    sampler: OnceLock<Arc<Sampler>>,
}

#[derive(Serialize, Deserialize)]
struct RefJson {
    kind: RefKind,
    params: RefParams,
}

impl TryFrom<RefJson> for ReferenceDensity {
    type Error = Error;
    fn try_from(j: RefJson) -> Result<Self> {
        ReferenceDensity::with_params(j.kind, j.params)
    }
}

impl From<ReferenceDensity> for RefJson {
    fn from(r: ReferenceDensity) -> Self {
        RefJson { kind: r.kind, params: r.params }
    }
}

impl fmt::Debug for ReferenceDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceDensity")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .finish()
    }
}

impl PartialEq for ReferenceDensity {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.params == other.params
    }
}

fn phi(x: f64, mean: f64, var: f64) -> f64 {
    (-(x - mean).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

fn ray_index(x: &TreePoint) -> Option<usize> {
    match x.orthant() {
        Some(OrthantId::Ray(k)) => Some(k as usize),
        _ => None,
    }
}

impl ReferenceDensity {
    pub fn new(kind: RefKind) -> Result<Self> {
        Self::with_params(kind, RefParams::default())
    }

    pub fn with_params(kind: RefKind, params: RefParams) -> Result<Self> {
        if !(params.x0 > 0.0 && params.x0.is_finite()) || !(params.t > 0.0 && params.t.is_finite()) {
            return Err(Error::OutOfRange(format!("x0 = {}, t = {}", params.x0, params.t)));
        }
        CoalescentParams::new(params.coalescent.t)?;
        let space = match &kind {
            RefKind::Case1 | RefKind::Case2 | RefKind::Case5Brownian | RefKind::Case6Coalescent => Space::T3,
            RefKind::Case3 | RefKind::Case4 | RefKind::G1 | RefKind::G2 => Space::T4,
            RefKind::Mixture(parts) => {
                let first = parts.first().ok_or(Error::Empty)?;
                if parts.iter().any(|(_, c)| c.space != first.1.space) {
                    return Err(Error::SpaceMismatch);
                }
                if parts.iter().any(|(w, _)| !(*w >= 0.0 && w.is_finite())) || parts.iter().all(|(w, _)| *w == 0.0) {
                    return Err(Error::OutOfRange("mixture weights".into()));
                }
                first.1.space
            }
        };
        Ok(ReferenceDensity { kind, params, space, normalizer: OnceLock::new(), sampler: OnceLock::new() })
    }

    /// Looks up `case1`..`case6`, `g1`, `g2` or `mix` (g1 and g2 in equal
    /// proportion).
    pub fn from_name(name: &str) -> Result<Self> {
        let kind = match name.to_ascii_lowercase().as_str() {
            "case1" => RefKind::Case1,
            "case2" => RefKind::Case2,
            "case3" => RefKind::Case3,
            "case4" => RefKind::Case4,
            "case5" => RefKind::Case5Brownian,
            "case6" => RefKind::Case6Coalescent,
            "g1" => RefKind::G1,
            "g2" => RefKind::G2,
            "mix" => return Self::g_mixture(0.5),
            other => return Err(Error::InvalidCoords(format!("unknown reference density '{other}'"))),
        };
        Self::new(kind)
    }

    /// π g1 + (1 − π) g2.
    pub fn g_mixture(pi: f64) -> Result<Self> {
        Self::new(RefKind::Mixture(vec![
            (pi, Self::new(RefKind::G1)?),
            (1.0 - pi, Self::new(RefKind::G2)?),
        ]))
    }

    pub fn kind(&self) -> &RefKind {
        &self.kind
    }

    pub fn params(&self) -> &RefParams {
        &self.params
    }

    /// Centre of g1 or g2.
    pub fn g_centre(which: u8) -> TreePoint {
        if which == 1 {
            TreePoint::t4(0, 1, [1.0, 1.0]).unwrap()
        } else {
            TreePoint::t4(2, 3, [1.0, 1.0]).unwrap()
        }
    }

    /// The closed form before normalization.
    pub fn unnormalized(&self, x: &TreePoint) -> f64 {
        let p = &self.params;
        match &self.kind {
            RefKind::Case1 => {
                let d = distance_unchecked(x, &TreePoint::t3(0, p.x0).unwrap());
                (-d * d / 2.0).exp()
            }
            RefKind::Case2 => {
                if ray_index(x) == Some(0) && x.norm() >= p.x0 {
                    return 0.0;
                }
                (-distance_unchecked(x, &TreePoint::t3(0, p.x0).unwrap())).exp()
            }
            RefKind::Case3 => (-x.norm().powi(2) / 2.0).exp(),
            RefKind::Case4 => {
                let inside = CASE4_SUPPORT.iter().any(|&(i, j)| x.in_closed(OrthantId::Quad(i, j)));
                if inside {
                    (-x.norm().powi(2) / 2.0).exp()
                } else {
                    0.0
                }
            }
            RefKind::Case5Brownian => {
                let u = x.norm();
                match ray_index(x) {
                    Some(0) => phi(u, p.x0, p.t) - phi(u, -p.x0, p.t) / 3.0,
                    _ => 2.0 / 3.0 * phi(u, -p.x0, p.t),
                }
            }
            RefKind::Case6Coalescent => {
                coalescent_density(&p.coalescent, ray_index(x).unwrap_or(1), x.norm()).unwrap_or(0.0)
            }
            RefKind::G1 => {
                let d = distance_unchecked(x, &Self::g_centre(1));
                (-d * d / 2.0).exp()
            }
            RefKind::G2 => {
                let d = distance_unchecked(x, &Self::g_centre(2));
                (-2.0 * d * d).exp()
            }
            RefKind::Mixture(parts) => {
                let total: f64 = parts.iter().map(|(w, _)| w).sum();
                parts.iter().map(|(w, c)| w / total * c.density(x)).sum()
            }
        }
    }

    /// Grid used for the normalizer: the default grid, widened to radius 40
    /// in T3 where the case-5 tail beyond 10 still carries 3e-5 of the mass.
    pub fn normalizer_grid(space: Space) -> GridSpec<f64> {
        match space {
            Space::T3 => GridSpec { spacing: 0.01, radius: 40.0 },
            Space::T4 => GridSpec::default_for(Space::T4),
        }
    }

    /// Grid integral of the unnormalized form, computed once.
    pub fn normalizer(&self) -> f64 {
        *self.normalizer.get_or_init(|| {
            grid_integrate(|x| self.unnormalized(x), self.space, &Self::normalizer_grid(self.space))
        })
    }

    pub fn eval(&self, x: &TreePoint) -> Result<f64> {
        if x.space() != self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.density(x))
    }

    /// Grid cell spacing used by the sampler.
    pub fn sampler_spacing(space: Space) -> f64 {
        match space {
            Space::T3 => 0.005,
            Space::T4 => 0.01,
        }
    }

    fn sampler(&self) -> &Sampler {
        self.sampler.get_or_init(|| {
            let r = GridSpec::<f64>::default_for(self.space).radius;
            Arc::new(Sampler::build(|x| self.unnormalized(x), self.space, Self::sampler_spacing(self.space), r))
        })
    }

    /// `n` independent draws, deterministic given `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<TreePoint>> {
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self.sampler().draw(n, &mut rng))
    }

    /// Draws from a two-or-more component mixture, returning the component
    /// index of every draw.
    pub fn sample_labelled(&self, n: usize, seed: u64) -> Result<(Vec<TreePoint>, Vec<usize>)> {
        let RefKind::Mixture(parts) = &self.kind else {
            return Ok((self.sample(n, seed)?, vec![0; n]));
        };
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let mut u = rng.gen::<f64>() * total;
            let mut k = parts.len() - 1;
            for (i, (w, _)) in parts.iter().enumerate() {
                if u < *w {
                    k = i;
                    break;
                }
                u -= w;
            }
            labels.push(k);
        }
        let mut points = vec![TreePoint::origin(self.space); n];
        for (k, (_, comp)) in parts.iter().enumerate() {
            let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == k).collect();
            let draws = comp.sampler().draw(idx.len(), &mut rng);
            for (i, p) in idx.into_iter().zip(draws) {
                points[i] = p;
            }
        }
        Ok((points, labels))
    }
}

impl Density<f64> for ReferenceDensity {
    fn space(&self) -> Space {
        self.space
    }

    fn density(&self, x: &TreePoint) -> f64 {
        self.unnormalized(x) / self.normalizer()
    }
}

/// Steps of the one-sided difference quotients.
pub const RICHARDSON_STEPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// lim_{h→0+} (f(0) − f(h))/h along half-line `branch` of T3, by two rounds
/// of Richardson extrapolation on the first-order quotients.
pub fn exterior_derivative(f: &dyn Density<f64>, branch: OrthantId) -> Result<f64> {
    let OrthantId::Ray(k) = branch else {
        return Err(Error::SpaceMismatch);
    };
    if f.space() != Space::T3 {
        return Err(Error::SpaceMismatch);
    }
    let f0 = f.density(&TreePoint::origin(Space::T3));
    if !f0.is_finite() {
        return Err(Error::OutOfRange("density is not finite at the origin".into()));
    }
    let q = RICHARDSON_STEPS.map(|h| (f0 - f.density(&TreePoint::t3(k, h).unwrap())) / h);
    let r1 = 2.0 * q[1] - q[0];
    let r2 = 2.0 * q[2] - q[1];
    Ok((4.0 * r2 - r1) / 3.0)
}
