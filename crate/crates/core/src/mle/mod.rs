//! Log-concave maximum likelihood estimation.
//!
//! The log-density is parametrized by its values `y` at the samples: the
//! estimate is exp(h̄_y) where h̄_y is the least concave majorant of the
//! labelled samples. `y` minimizes the convex objective
//! σ(y) = −Σ w_i y_i + ∫ exp(h̄_y) dν.

mod existence;
mod knots;
pub use knots::WARM_ITER;
pub mod ralg;

pub use existence::{check_existence, ExistenceReport, OrthantClass};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{concave_hull_1d, hull_2d, ConcavePWL1D, Hull2D, HullOptions, LabeledPoint, Mode, OrthantHull};
use crate::integrate::Density;
use crate::treespace::{distance_unchecked, OrthantId, Space};
use crate::TreePoint;

/// Majorant in either space.
#[derive(Clone, Debug)]
pub enum Hull {
    OneD(ConcavePWL1D<f64>),
    TwoD(Hull2D<f64>),
}

impl Hull {
    pub fn evaluate(&self, x: &TreePoint) -> f64 {
        match self {
            Hull::OneD(h) => h.evaluate(x),
            Hull::TwoD(h) => h.evaluate(x),
        }
    }

    pub fn integral_exp(&self) -> f64 {
        match self {
            Hull::OneD(h) => h.integral_exp(),
            Hull::TwoD(h) => h.integral_exp(),
        }
    }

    pub fn integral_exp_grad(&self, n: usize) -> (f64, Vec<f64>) {
        match self {
            Hull::OneD(h) => h.integral_exp_grad(n),
            Hull::TwoD(h) => h.integral_exp_grad(n),
        }
    }

    pub fn shift(&mut self, c: f64) {
        match self {
            Hull::OneD(h) => h.shift(c),
            Hull::TwoD(h) => h.shift(c),
        }
    }

    /// Whether the skeleton iteration stopped on its own (always true in T3).
    pub fn converged(&self) -> bool {
        match self {
            Hull::OneD(_) => true,
            Hull::TwoD(h) => h.converged,
        }
    }
}

/// Builds h̄_y for `samples` labelled with `y`.
pub fn build_hull(samples: &[TreePoint], y: &[f64], mode: Mode, opts: &HullOptions<f64>) -> Result<Hull> {
    if samples.len() != y.len() {
        return Err(Error::InvalidCoords(format!("{} samples but {} values", samples.len(), y.len())));
    }
    let pts: Vec<LabeledPoint<f64>> = samples.iter().zip(y).map(|(x, &v)| LabeledPoint::new(*x, v)).collect();
    match samples.first().map(|x| x.space()) {
        None => Err(Error::Empty),
        Some(Space::T3) => concave_hull_1d(&pts, mode).map(Hull::OneD),
        Some(Space::T4) => {
            if mode == Mode::Bent {
                return Err(Error::InvalidCoords("bent mode is only defined on T3".into()));
            }
            hull_2d(&pts, opts).map(Hull::TwoD)
        }
    }
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

fn check_weights(w: &[f64], n: usize) -> Result<()> {
    if w.len() != n {
        return Err(Error::InvalidCoords(format!("{n} samples but {} weights", w.len())));
    }
    if w.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidCoords("weights must be finite and nonnegative".into()));
    }
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidCoords(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

/// σ(y) = −Σ w_i y_i + ∫ exp(h̄_y) dν. Uniform weights when `weights` is None.
pub fn sigma(y: &[f64], samples: &[TreePoint], weights: Option<&[f64]>, mode: Mode, opts: &HullOptions<f64>) -> Result<f64> {
    let w = weights.map_or_else(|| uniform(samples.len()), <[f64]>::to_vec);
    check_weights(&w, samples.len())?;
    let h = build_hull(samples, y, mode, opts)?;
    Ok(-w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + h.integral_exp())
}

/// σ(y) and a subgradient.
pub fn sigma_grad(y: &[f64], samples: &[TreePoint], w: &[f64], mode: Mode, opts: &HullOptions<f64>) -> Result<(f64, Vec<f64>)> {
    let h = build_hull(samples, y, mode, opts)?;
    let (s, mut g) = h.integral_exp_grad(samples.len());
    let mut f = s;
    for i in 0..y.len() {
        f -= w[i] * y[i];
        g[i] -= w[i];
    }
    Ok((f, g))
}

/// ψ(y) = Σ w_i h̄_y(X_i) − ∫ exp(h̄_y) dν.
pub fn psi(y: &[f64], samples: &[TreePoint], weights: Option<&[f64]>, mode: Mode, opts: &HullOptions<f64>) -> Result<f64> {
    let w = weights.map_or_else(|| uniform(samples.len()), <[f64]>::to_vec);
    check_weights(&w, samples.len())?;
    let h = build_hull(samples, y, mode, opts)?;
    let fit: f64 = samples.iter().zip(&w).map(|(x, wi)| wi * h.evaluate(x)).sum();
    Ok(fit - h.integral_exp())
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub mode: Mode,
    pub hull: HullOptions<f64>,
    pub max_iter: usize,
    pub ftol: f64,
    pub xtol: f64,
    /// T4 only: window for the optimizer's stall rule, which stops once the
    /// best σ improved by less than `ftol` per iteration on average over
    /// this many iterations (0 disables). T3 fits use exact hulls and the
    /// plain decrease/step rule.
    pub stall: usize,
    /// ‖y‖∞ beyond which the likelihood is taken to be unbounded.
    pub y_max: f64,
    /// Starting values (per input sample); the kernel pilot otherwise.
    pub init: Option<Vec<f64>>,
    /// Run the T4 existence check before fitting.
    pub check_existence: bool,
    /// Return the best iterate instead of failing when `max_iter` is hit.
    /// EM uses this for partial M-steps.
    pub accept_max_iter: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            mode: Mode::LogConcave,
            hull: HullOptions::default(),
            max_iter: 5000,
            ftol: 1e-8,
            xtol: 1e-8,
            stall: 200,
            y_max: 50.0,
            init: None,
            check_existence: true,
            accept_max_iter: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub iterations: usize,
    pub evaluations: usize,
    pub final_step: f64,
    /// ∫ exp(h̄) at the optimizer's best point, before renormalizing.
    pub raw_normalization: f64,
    pub hull_converged: bool,
    /// Best σ after each iteration.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma_trace: Vec<f64>,
}

/// Fitted density exp(h̄_{y*}).
#[derive(Clone, Debug)]
pub struct LogConcaveEstimate {
    /// Distinct sample positions.
    pub samples: Vec<TreePoint>,
    pub weights: Vec<f64>,
    pub y_star: Vec<f64>,
    pub hull: Hull,
    pub sigma: f64,
    pub normalization: f64,
    pub mode: Mode,
    pub trace: SolverTrace,
}

impl LogConcaveEstimate {
    pub fn log_density(&self, x: &TreePoint) -> f64 {
        self.hull.evaluate(x)
    }

    /// Σ w_i log f̂(X_i) − ∫ f̂ dν.
    pub fn psi(&self) -> f64 {
        let fit: f64 = self.samples.iter().zip(&self.weights).map(|(x, w)| w * self.hull.evaluate(x)).sum();
        fit - self.hull.integral_exp()
    }
}

impl Density<f64> for LogConcaveEstimate {
    fn space(&self) -> Space {
        self.samples[0].space()
    }

    fn density(&self, x: &TreePoint) -> f64 {
        self.hull.evaluate(x).exp()
    }
}

/// Merges repeated positions, summing their weights.
pub fn merge_duplicates(samples: &[TreePoint], weights: &[f64]) -> (Vec<TreePoint>, Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let key = |x: &TreePoint| (x.orthant().map(|o| o.index()), x.raw_coords()[0].to_bits(), x.raw_coords()[1].to_bits());
    order.sort_by_key(|&i| key(&samples[i]));
    let mut pos = Vec::new();
    let mut w = Vec::new();
    let mut map = vec![0; samples.len()];
    let mut last = None;
    for i in order {
        let k = key(&samples[i]);
        if last != Some(k) {
            pos.push(samples[i]);
            w.push(0.0);
            last = Some(k);
        }
        let m = pos.len() - 1;
        w[m] += weights[i];
        map[i] = m;
    }
    (pos, w, map)
}

/// Log of a Gaussian kernel pilot at each sample, clipped to [−10, 10].
pub fn pilot_values(samples: &[TreePoint], weights: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let dim = samples[0].space().dim() as f64;
    let mut d2 = vec![0.0; n * n];
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance_unchecked(&samples[i], &samples[j]);
            d2[i * n + j] = d * d;
            d2[j * n + i] = d * d;
            total += weights[i] * weights[j] * d * d;
        }
    }
    // Σ_{i<j} w_i w_j d² ≈ σ² (for uniform weights, half the mean square pair distance)
    let spread = total.max(1e-12).sqrt();
    let eff_n = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let h = 1.06 * spread * eff_n.powf(-1.0 / (4.0 + dim));
    let c = (2.0 * std::f64::consts::PI * h * h).powf(-dim / 2.0);
    (0..n)
        .map(|i| {
            let s: f64 = (0..n).map(|j| weights[j] * (-d2[i * n + j] / (2.0 * h * h)).exp()).sum();
            (c * s).ln().clamp(-10.0, 10.0)
        })
        .collect()
}

/// Fits the log-concave (or bent-class) MLE with the given sample weights
/// (uniform when None).
pub fn fit(samples: &[TreePoint], weights: Option<&[f64]>, opts: &FitOptions) -> Result<LogConcaveEstimate> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let space = samples[0].space();
    if samples.iter().any(|x| x.space() != space) {
        return Err(Error::SpaceMismatch);
    }
    if opts.mode == Mode::Bent && space != Space::T3 {
        return Err(Error::InvalidCoords("bent mode is only defined on T3".into()));
    }
    let w_in = weights.map_or_else(|| uniform(samples.len()), <[f64]>::to_vec);
    check_weights(&w_in, samples.len())?;
    // zero-weight samples do not constrain the fit
    let keep: Vec<usize> = (0..samples.len()).filter(|&i| w_in[i] > 0.0).collect();
    let kept: Vec<TreePoint> = keep.iter().map(|&i| samples[i]).collect();
    let kept_w: Vec<f64> = keep.iter().map(|&i| w_in[i]).collect();
    let (pos, w, map) = merge_duplicates(&kept, &kept_w);
    match space {
        Space::T3 => {
            if pos.len() < 2 {
                return Err(Error::TooFewPoints(format!("need 2 distinct positions, got {}", pos.len())));
            }
        }
        Space::T4 => {
            if pos.len() < 3 {
                return Err(Error::TooFewPoints(format!("need 3 distinct positions, got {}", pos.len())));
            }
            if opts.check_existence {
                let rep = check_existence(&pos)?;
                if !rep.overall {
                    let bad: Vec<String> = rep
                        .orthants
                        .iter()
                        .filter(|(_, c)| matches!(c, OrthantClass::LowerDim | OrthantClass::BoundaryOnlyUnsupported))
                        .map(|(o, c)| format!("{o:?}: {c:?}"))
                        .collect();
                    return Err(Error::ExistenceViolation(if bad.is_empty() {
                        "no quadrant has positive hull area".into()
                    } else {
                        bad.join(", ")
                    }));
                }
            }
        }
    }

    let y0 = match &opts.init {
        Some(v) => {
            if v.len() != samples.len() {
                return Err(Error::InvalidCoords(format!("{} initial values for {} samples", v.len(), samples.len())));
            }
            let mut y = vec![f64::NEG_INFINITY; pos.len()];
            for (k, &i) in keep.iter().enumerate() {
                y[map[k]] = y[map[k]].max(v[i]);
            }
            y
        }
        None => pilot_values(&pos, &w),
    };

    let ropts = ralg::RalgOptions {
        max_iter: opts.max_iter,
        ftol: opts.ftol,
        xtol: opts.xtol,
        stall: if space == Space::T4 { opts.stall } else { 0 },
        x_max: opts.y_max,
        ..Default::default()
    };
    let res = if space == Space::T3 {
        knots::fit_t3(&pos, &w, y0, opts.mode, &opts.hull, &ropts)?
    } else {
        let mut failure: Option<Error> = None;
        let res = ralg::minimize(
            |y| match sigma_grad(y, &pos, &w, opts.mode, &opts.hull) {
                Ok(v) if v.0.is_finite() => v,
                Ok(v) => (f64::INFINITY, v.1),
                Err(e) => {
                    failure.get_or_insert(e);
                    (f64::INFINITY, vec![0.0; y.len()])
                }
            },
            y0,
            &ropts,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        res
    };
    match res.status {
        ralg::RalgStatus::Escaped(m) => return Err(Error::Unbounded(m)),
        ralg::RalgStatus::MaxIter if !opts.accept_max_iter => return Err(Error::NonConvergence(res.iterations)),
        ralg::RalgStatus::MaxIter => {}
        ralg::RalgStatus::Converged => {}
    }

    let mut y = res.x;
    let mut hull = build_hull(&pos, &y, opts.mode, &opts.hull)?;
    // samples under the majorant take its value; the hull is unchanged
    for (yi, x) in y.iter_mut().zip(&pos) {
        *yi = yi.max(hull.evaluate(x));
    }
    let raw = hull.integral_exp();
    let c = -raw.ln();
    hull.shift(c);
    for yi in &mut y {
        *yi += c;
    }
    let normalization = hull.integral_exp();
    let sigma = -w.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() + normalization;
    Ok(LogConcaveEstimate {
        samples: pos,
        weights: w,
        y_star: y,
        sigma,
        normalization,
        mode: opts.mode,
        trace: SolverTrace {
            iterations: res.iterations,
            evaluations: res.evaluations,
            final_step: res.last_step,
            raw_normalization: raw,
            hull_converged: hull.converged(),
            sigma_trace: res.trace,
        },
        hull,
    })
}

/// Serialized quadrant hull.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrthantHullJson {
    pub orthant: OrthantId,
    /// (u, v, y) per vertex.
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HullJson {
    OneD {
        mode: Mode,
        /// Breakpoints (position, value) per half-line.
        branches: [Vec<(f64, f64)>; 3],
        origin_value: Option<f64>,
    },
    TwoD {
        orthants: Vec<OrthantHullJson>,
        origin_interval: Option<(f64, f64)>,
        iterations: usize,
        converged: bool,
    },
}

impl From<&Hull> for HullJson {
    fn from(h: &Hull) -> Self {
        match h {
            Hull::OneD(h) => HullJson::OneD {
                mode: h.mode,
                branches: h.branches.clone(),
                origin_value: h.origin_value,
            },
            Hull::TwoD(h) => HullJson::TwoD {
                orthants: h
                    .orthants
                    .iter()
                    .filter(|o| !o.points.is_empty())
                    .map(|o| OrthantHullJson {
                        orthant: o.orthant,
                        vertices: o.points.clone(),
                        faces: o.faces.clone(),
                    })
                    .collect(),
                origin_interval: h.origin_interval,
                iterations: h.iterations,
                converged: h.converged,
            },
        }
    }
}

impl From<HullJson> for Hull {
    fn from(j: HullJson) -> Self {
        match j {
            HullJson::OneD {
                mode,
                branches,
                origin_value,
            } => Hull::OneD(ConcavePWL1D::from_parts(mode, branches, origin_value)),
            HullJson::TwoD {
                orthants,
                origin_interval,
                iterations,
                converged,
            } => {
                let mut all: Vec<OrthantHull<f64>> = (0..15)
                    .map(|o| OrthantHull::from_parts(OrthantId::from_index(Space::T4, o), Vec::new(), Vec::new()))
                    .collect();
                for o in orthants {
                    let k = o.orthant.index();
                    all[k] = OrthantHull::from_parts(o.orthant, o.vertices, o.faces);
                }
                Hull::TwoD(Hull2D::from_parts(all, origin_interval, iterations, converged))
            }
        }
    }
}

/// On-disk form of a [`LogConcaveEstimate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateJson {
    pub mode: Mode,
    pub samples: Vec<TreePoint>,
    pub weights: Vec<f64>,
    pub y_star: Vec<f64>,
    pub hull: HullJson,
    pub sigma: f64,
    pub normalization: f64,
    pub trace: SolverTrace,
}

impl From<&LogConcaveEstimate> for EstimateJson {
    fn from(e: &LogConcaveEstimate) -> Self {
        let mut trace = e.trace.clone();
        trace.sigma_trace.clear();
        EstimateJson {
            mode: e.mode,
            samples: e.samples.clone(),
            weights: e.weights.clone(),
            y_star: e.y_star.clone(),
            hull: (&e.hull).into(),
            sigma: e.sigma,
            normalization: e.normalization,
            trace,
        }
    }
}

impl TryFrom<EstimateJson> for LogConcaveEstimate {
    type Error = Error;

    fn try_from(j: EstimateJson) -> Result<Self> {
        if j.samples.is_empty() {
            return Err(Error::Empty);
        }
        if j.samples.len() != j.y_star.len() || j.samples.len() != j.weights.len() {
            return Err(Error::InvalidCoords("samples, weights and y_star differ in length".into()));
        }
        let space = j.samples[0].space();
        let hull: Hull = j.hull.into();
        match (&hull, space) {
            (Hull::OneD(_), Space::T3) | (Hull::TwoD(_), Space::T4) => {}
            _ => return Err(Error::SpaceMismatch),
        }
        Ok(LogConcaveEstimate {
            samples: j.samples,
            weights: j.weights,
            y_star: j.y_star,
            hull,
            sigma: j.sigma,
            normalization: j.normalization,
            mode: j.mode,
            trace: j.trace,
        })
    }
}
