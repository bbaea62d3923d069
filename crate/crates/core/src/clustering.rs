//! Fréchet means, k-means++ with Fréchet centroids, and log-concave mixture EM.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mle::{fit, FitOptions, LogConcaveEstimate};
use crate::treespace::distance_unchecked;
use crate::treespace::geodesic_unchecked;
use crate::{OrthantId, TreePoint};

#[derive(Clone, Debug)]
pub struct FrechetOptions {
    /// Cap on proximal sweeps; the 1/j schedule converges too slowly for
    /// the displacement rule alone.
    pub max_sweeps: usize,
    /// Stop once a sweep moves the iterate less than this.
    pub tol: f64,
    /// Seeds the per-sweep shuffle.
    pub seed: u64,
    /// Finish with projected descent in each closed orthant.
    pub polish: bool,
}

impl Default for FrechetOptions {
    fn default() -> Self {
        FrechetOptions {
            max_sweeps: 200,
            tol: 1e-8,
            seed: 0,
            polish: true,
        }
    }
}

/// Result of [`frechet_mean_traced`].
#[derive(Clone, Debug)]
pub struct FrechetResult {
    pub mean: TreePoint,
    pub objective: f64,
    /// Objective after each proximal sweep.
    pub sweep_objectives: Vec<f64>,
    pub sweeps: usize,
}

/// F(x) = Σ w_i d(x, X_i)².
pub fn frechet_objective(x: &TreePoint, points: &[TreePoint], weights: &[f64]) -> f64 {
    points
        .iter()
        .zip(weights)
        .map(|(p, w)| {
            let d = distance_unchecked(x, p);
            w * d * d
        })
        .sum()
}

fn normalized_weights(n: usize, weights: Option<&[f64]>) -> Result<Vec<f64>> {
    match weights {
        None => Ok(vec![1.0 / n as f64; n]),
        Some(w) => {
            if w.len() != n || w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidCoords("weights must be finite, non-negative, one per point".into()));
            }
            let s: f64 = w.iter().sum();
            if s <= 0.0 {
                return Err(Error::InvalidCoords("weights sum to zero".into()));
            }
            Ok(w.iter().map(|v| v / s).collect())
        }
    }
}

/// Weighted Fréchet mean (uniform weights when None).
pub fn frechet_mean(points: &[TreePoint], weights: Option<&[f64]>, opts: &FrechetOptions) -> Result<TreePoint> {
    frechet_mean_traced(points, weights, opts).map(|r| r.mean)
}

/// Cyclic proximal point iteration with λ_j = 1/j, then per-orthant polish.
pub fn frechet_mean_traced(points: &[TreePoint], weights: Option<&[f64]>, opts: &FrechetOptions) -> Result<FrechetResult> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    let space = points[0].space();
    if points.iter().any(|p| p.space() != space) {
        return Err(Error::SpaceMismatch);
    }
    let w = normalized_weights(points.len(), weights)?;
    let active: Vec<usize> = (0..points.len()).filter(|&i| w[i] > 0.0).collect();
    if active.len() == 1 {
        let m = points[active[0]];
        return Ok(FrechetResult { mean: m, objective: 0.0, sweep_objectives: vec![], sweeps: 0 });
    }

    // start at the best of up to 64 evenly spread samples
    let stride = active.len().div_ceil(64);
    let mut x = active
        .iter()
        .step_by(stride)
        .map(|&i| (frechet_objective(&points[i], points, &w), points[i]))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
        .unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order = active.clone();
    let mut trace = Vec::new();
    let mut sweeps = 0;
    for j in 1..=opts.max_sweeps {
        sweeps = j;
        order.shuffle(&mut rng);
        let lambda = 1.0 / j as f64;
        let start = x;
        for &i in &order {
            let s = 2.0 * lambda * w[i];
            let t = s / (1.0 + s);
            x = geodesic_unchecked(&x, &points[i]).point_at(t);
        }
        trace.push(frechet_objective(&x, points, &w));
        if distance_unchecked(&start, &x) < opts.tol {
            break;
        }
    }

    let mut best = (frechet_objective(&x, points, &w), x);
    if opts.polish {
        for o in space.orthants() {
            let c0 = x.coords_in(o).unwrap_or([0.0, 0.0]);
            let (c, f) = polish_in(o, c0, points, &w);
            if f < best.0 {
                best = (f, TreePoint::from_orthant_coords(o, c));
            }
        }
    }
    Ok(FrechetResult { mean: best.1, objective: best.0, sweep_objectives: trace, sweeps })
}

/// Projected gradient descent of F over the closed orthant `o`, from `c0`.
fn polish_in(o: OrthantId, c0: [f64; 2], points: &[TreePoint], w: &[f64]) -> ([f64; 2], f64) {
    let dim = o.space().dim();
    let obj = |c: [f64; 2]| frechet_objective(&TreePoint::from_orthant_coords(o, c), points, w);
    let mut c = c0;
    let mut f = obj(c);
    for _ in 0..200 {
        let mut g = [0.0; 2];
        for k in 0..dim {
            let e = 1e-7 * c[k].max(1.0);
            let mut hi = c;
            hi[k] += e;
            if c[k] > e {
                let mut lo = c;
                lo[k] -= e;
                g[k] = (obj(hi) - obj(lo)) / (2.0 * e);
            } else {
                g[k] = (obj(hi) - f) / e;
            }
        }
        let mut s = 0.5;
        let mut moved = false;
        while s > 1e-10 {
            let mut cand = c;
            for k in 0..dim {
                cand[k] = (c[k] - s * g[k]).max(0.0);
            }
            let decrease: f64 = (0..dim).map(|k| g[k] * (c[k] - cand[k])).sum();
            if decrease <= 0.0 {
                break;
            }
            let fc = obj(cand);
            if fc <= f - 1e-4 * decrease {
                let step = ((cand[0] - c[0]).powi(2) + (cand[1] - c[1]).powi(2)).sqrt();
                c = cand;
                f = fc;
                moved = step > 1e-13;
                break;
            }
            s *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (c, f)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centers: Vec<TreePoint>,
    pub within_ss: f64,
    /// withinSS after each assignment step.
    pub within_ss_trace: Vec<f64>,
    pub iterations: usize,
}

fn nearest(x: &TreePoint, centers: &[TreePoint]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let d = distance_unchecked(x, c);
        if d * d < best.1 {
            best = (k, d * d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations with Fréchet centroids.
pub fn kmeanspp(points: &[TreePoint], k: usize, seed: u64) -> Result<ClusterAssignment> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    if k == 0 || k > n {
        return Err(Error::TooFewPoints(format!("K = {k} with {n} points")));
    }
    let space = points[0].space();
    if points.iter().any(|p| p.space() != space) {
        return Err(Error::SpaceMismatch);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| distance_unchecked(p, &points[chosen[0]]).powi(2))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            while d2[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            let rest: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            rest[rng.gen_range(0..rest.len())]
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(distance_unchecked(p, &points[next]).powi(2));
        }
    }
    let mut centers: Vec<TreePoint> = chosen.iter().map(|&i| points[i]).collect();

    let fopts = FrechetOptions { seed, ..Default::default() };
    let mut labels: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..100 {
        iterations += 1;
        let assigned: Vec<(usize, f64)> = points.iter().map(|p| nearest(p, &centers)).collect();
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        trace.push(assigned.iter().map(|a| a.1).sum());
        if new_labels == labels {
            break;
        }
        labels = new_labels;
        for (c, center) in centers.iter_mut().enumerate() {
            let members: Vec<TreePoint> = (0..n).filter(|&i| labels[i] == c).map(|i| points[i]).collect();
            if !members.is_empty() {
                *center = frechet_mean(&members, None, &fopts)?;
            }
        }
    }
    let within_ss = within_ss(points, &labels, &centers);
    Ok(ClusterAssignment { labels, centers, within_ss, within_ss_trace: trace, iterations })
}

/// Σ_i d(X_i, center_{label_i})².
pub fn within_ss(points: &[TreePoint], labels: &[usize], centers: &[TreePoint]) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| distance_unchecked(p, &centers[l]).powi(2))
        .sum()
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Fraction of agreeing labels under the best relabelling of `labels`.
pub fn accuracy(labels: &[usize], truth: &[usize]) -> f64 {
    if labels.is_empty() {
        return 1.0;
    }
    let k = labels.iter().chain(truth).max().unwrap() + 1;
    permutations(k)
        .iter()
        .map(|perm| labels.iter().zip(truth).filter(|(l, t)| perm[**l] == **t).count())
        .max()
        .unwrap() as f64
        / labels.len() as f64
}

#[derive(Clone, Debug)]
pub struct EmOptions {
    pub max_iter: usize,
    /// Stop once the log-likelihood improves by less than this.
    pub tol: f64,
    /// Options for every M-step fit. `init`, `accept_max_iter` and
    /// `max_iter` are overridden after the first M-step.
    pub fit: FitOptions,
    /// Optimizer iterations per warm-started M-step.
    pub mstep_iter: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            max_iter: 200,
            tol: 1e-6,
            fit: FitOptions { y_max: 200.0, ..Default::default() },
            mstep_iter: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MixtureModel {
    pub proportions: Vec<f64>,
    pub components: Vec<LogConcaveEstimate>,
    /// n × K, rows sum to 1.
    pub responsibilities: Vec<Vec<f64>>,
    /// Observed-data log-likelihood after each M-step.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    /// The k-means++ run that initialized EM.
    pub init: ClusterAssignment,
}

impl MixtureModel {
    pub fn k(&self) -> usize {
        self.proportions.len()
    }

    pub fn density(&self, x: &TreePoint) -> f64 {
        self.proportions
            .iter()
            .zip(&self.components)
            .map(|(p, c)| p * c.log_density(x).exp())
            .sum()
    }

    pub fn log_likelihood(&self) -> f64 {
        *self.loglik_trace.last().unwrap_or(&f64::NEG_INFINITY)
    }

    /// Most responsible component per sample (ties to the lowest index).
    pub fn labels(&self) -> Vec<usize> {
        self.responsibilities
            .iter()
            .map(|r| {
                let mut best = 0;
                for k in 1..r.len() {
                    if r[k] > r[best] {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }
}

/// Responsibilities below this are treated as zero so that component
/// supports do not creep over the whole sample.
const R_FLOOR: f64 = 1e-12;

/// E-step: responsibilities and the observed-data log-likelihood.
fn e_step(points: &[TreePoint], props: &[f64], comps: &[LogConcaveEstimate]) -> Result<(Vec<Vec<f64>>, f64)> {
    let mut ll = 0.0;
    let mut resp = Vec::with_capacity(points.len());
    for x in points {
        let p: Vec<f64> = props.iter().zip(comps).map(|(pi, c)| pi * c.log_density(x).exp()).collect();
        let s: f64 = p.iter().sum();
        if !(s > 0.0) {
            return Err(Error::NonConvergence(0));
        }
        ll += s.ln();
        let mut r: Vec<f64> = p.iter().map(|v| v / s).collect();
        for v in &mut r {
            if *v < R_FLOOR {
                *v = 0.0;
            }
        }
        let t: f64 = r.iter().sum();
        r.iter_mut().for_each(|v| *v /= t);
        resp.push(r);
    }
    Ok((resp, ll))
}

/// Log-concave mixture EM started from k-means++ labels.
pub fn em_mixture(points: &[TreePoint], k: usize, seed: u64, opts: &EmOptions) -> Result<MixtureModel> {
    let init = kmeanspp(points, k, seed)?;
    let n = points.len();
    let space = points[0].space();
    if k == 1 {
        let est = fit(points, None, &opts.fit)?;
        let (resp, ll) = e_step(points, &[1.0], std::slice::from_ref(&est))?;
        return Ok(MixtureModel {
            proportions: vec![1.0],
            components: vec![est],
            responsibilities: resp,
            loglik_trace: vec![ll],
            iterations: 1,
            init,
        });
    }
    let mut resp: Vec<Vec<f64>> = init
        .labels
        .iter()
        .map(|&l| (0..k).map(|c| if c == l { 1.0 } else { 0.0 }).collect())
        .collect();
    let min_support = space.dim() + 1;
    let mut comps: Vec<LogConcaveEstimate> = Vec::new();
    let mut props = vec![0.0; k];
    let mut trace = Vec::new();
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let mut next = Vec::with_capacity(k);
        for c in 0..k {
            let mut w: Vec<f64> = resp.iter().map(|r| r[c]).collect();
            let mass: f64 = w.iter().sum();
            if w.iter().filter(|&&v| v > 0.0).count() < min_support {
                return Err(Error::ComponentCollapse(c));
            }
            props[c] = mass / n as f64;
            w.iter_mut().for_each(|v| *v /= mass);
            let mut fo = opts.fit.clone();
            if let Some(prev) = comps.get(c) {
                fo.init = Some(points.iter().map(|x| prev.log_density(x).max(-0.75 * fo.y_max)).collect());
                fo.accept_max_iter = true;
                fo.max_iter = opts.mstep_iter;
            }
            let est = fit(points, Some(&w), &fo).map_err(|e| match e {
                Error::TooFewPoints(_) | Error::ExistenceViolation(_) => Error::ComponentCollapse(c),
                e => e,
            })?;
            // Generalized EM: the approximate T4 hull is not idempotent, so a
            // warm-started fit can land slightly below the previous component.
            let q = |g: &LogConcaveEstimate| -> f64 {
                points.iter().zip(&w).filter(|(_, &v)| v > 0.0).map(|(x, v)| v * g.log_density(x)).sum()
            };
            match comps.get(c) {
                Some(prev) if q(&est) < q(prev) => next.push(prev.clone()),
                _ => next.push(est),
            }
        }
        comps = next;
        let (r, ll) = e_step(points, &props, &comps)?;
        resp = r;
        let done = trace.last().is_some_and(|&prev: &f64| ll - prev < opts.tol);
        trace.push(ll);
        if done {
            break;
        }
    }
    Ok(MixtureModel {
        proportions: props,
        components: comps,
        responsibilities: resp,
        loglik_trace: trace,
        iterations,
        init,
    })
}
