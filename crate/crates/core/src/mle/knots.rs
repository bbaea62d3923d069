//! T3 fits on a reduced knot set.
//!
//! The optimum is linear between consecutive knots, so a sample that is not
//! a knot can hand its weight to the two knots around it (barycentrically)
//! without changing the objective on that class. The reduced problem is a
//! weighted fit on the knots alone. Its solution is the full optimum iff no
//! concave hinge −(r − t)_+ at another sample improves ψ, i.e.
//! ∫ (r − t)_+ f̂ ≤ Σ w_i (r_i − t)_+ along that half-line. Samples that
//! violate this join the knot set and the reduced fit is repeated.

use crate::error::Result;
use crate::hull::{concave_hull_1d, ConcavePWL1D, LabeledPoint, Mode};
use crate::integrate::{segment_exp, segment_exp_grad};
use crate::treespace::OrthantId;
use crate::TreePoint;

use super::ralg::{self, RalgOptions, RalgResult, RalgStatus};
use super::sigma_grad;
use crate::hull::HullOptions;

/// Full-problem iterations before switching to the knot set.
pub const WARM_ITER: usize = 300;
const HINGE_TOL: f64 = 1e-8;
const MAX_ROUNDS: usize = 40;
/// Reduced solves also stop once σ improved by less than
/// `STALL_FTOL · STALL_WINDOW` over the last `STALL_WINDOW` iterations: the
/// r-algorithm's steps shrink slowly long after σ has settled.
const STALL_WINDOW: usize = 500;
const STALL_FTOL: f64 = 1e-13;
/// Starting knots per half-line.
const COARSE_KNOTS: usize = 40;

struct Layout {
    /// (radius, sample index) per half-line, ascending.
    rays: [Vec<(f64, usize)>; 3],
    at_origin: Vec<usize>,
}

fn layout(pos: &[TreePoint]) -> Layout {
    let mut rays: [Vec<(f64, usize)>; 3] = Default::default();
    let mut at_origin = Vec::new();
    for (i, x) in pos.iter().enumerate() {
        match x.orthant() {
            Some(OrthantId::Ray(k)) => rays[k as usize].push((x.norm(), i)),
            _ => at_origin.push(i),
        }
    }
    for r in &mut rays {
        r.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Layout { rays, at_origin }
}

fn hull_of(pos: &[TreePoint], y: &[f64], mode: Mode) -> Result<ConcavePWL1D<f64>> {
    let pts: Vec<LabeledPoint<f64>> = pos.iter().zip(y).map(|(x, &v)| LabeledPoint::new(*x, v)).collect();
    concave_hull_1d(&pts, mode)
}

/// Samples that are breakpoints of `h`, plus the ends of every half-line and
/// any sample at the origin.
fn vertex_knots(lay: &Layout, h: &ConcavePWL1D<f64>) -> Vec<bool> {
    let n = lay.rays.iter().map(Vec::len).sum::<usize>() + lay.at_origin.len();
    let mut knot = vec![false; n];
    for &i in &lay.at_origin {
        knot[i] = true;
    }
    for (ray, br) in lay.rays.iter().zip(&h.branches) {
        if let (Some(a), Some(b)) = (ray.first(), ray.last()) {
            knot[a.1] = true;
            knot[b.1] = true;
        }
        for &(r, _) in br {
            let s = ray.partition_point(|p| p.0 < r);
            if s < ray.len() && ray[s].0 == r {
                knot[ray[s].1] = true;
            }
        }
    }
    knot
}

/// Knot indices and their lumped weights.
fn lump(lay: &Layout, w: &[f64], knot: &[bool]) -> (Vec<usize>, Vec<f64>) {
    let mut lumped = vec![0.0; w.len()];
    for &i in &lay.at_origin {
        lumped[i] += w[i];
    }
    for ray in &lay.rays {
        let ks: Vec<usize> = (0..ray.len()).filter(|&s| knot[ray[s].1]).collect();
        for win in ks.windows(2) {
            let (lo, hi) = (ray[win[0]], ray[win[1]]);
            lumped[lo.1] += w[lo.1];
            for &(r, i) in &ray[win[0] + 1..win[1]] {
                let t = (r - lo.0) / (hi.0 - lo.0);
                lumped[lo.1] += (1.0 - t) * w[i];
                lumped[hi.1] += t * w[i];
            }
        }
        if let Some(&last) = ks.last() {
            lumped[ray[last].1] += w[ray[last].1];
        }
    }
    let idx: Vec<usize> = (0..w.len()).filter(|&i| knot[i]).collect();
    let wk = idx.iter().map(|&i| lumped[i]).collect();
    (idx, wk)
}

/// ∫ (r − t)_+ exp(h) dr along one branch.
fn upper_moment(br: &[(f64, f64)], t: f64) -> f64 {
    let mut s = 0.0;
    for win in br.windows(2) {
        let ((r0, a), (r1, b)) = (win[0], win[1]);
        if r1 <= t {
            continue;
        }
        if r0 >= t {
            let len = r1 - r0;
            s += len * segment_exp_grad(len, a, b)[1] + (r0 - t) * segment_exp(len, a, b);
        } else {
            let at = a + (t - r0) / (r1 - r0) * (b - a);
            let len = r1 - t;
            s += len * segment_exp_grad(len, at, b)[1];
        }
    }
    s
}

/// Non-knot samples where the hinge condition fails by more than the
/// tolerance: the worst sample of each run of consecutive violators.
fn hinge_violations(lay: &Layout, w: &[f64], knot: &[bool], h: &ConcavePWL1D<f64>) -> Vec<usize> {
    let mut out = Vec::new();
    for (ray, br) in lay.rays.iter().zip(&h.branches) {
        // suffix sums of w and w·r over the samples already passed
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut run: Option<(f64, usize)> = None;
        for &(r, i) in ray.iter().rev() {
            let d = if knot[i] { f64::NEG_INFINITY } else { upper_moment(br, r) - (s1 - r * s0) };
            if d > HINGE_TOL {
                if run.map_or(true, |(m, _)| d > m) {
                    run = Some((d, i));
                }
            } else if let Some((_, j)) = run.take() {
                out.push(j);
            }
            s0 += w[i];
            s1 += w[i] * r;
        }
        out.extend(run.map(|(_, j)| j));
    }
    out
}

fn solve(pos: &[TreePoint], w: &[f64], y0: Vec<f64>, mode: Mode, hopts: &HullOptions<f64>, ropts: &RalgOptions, failure: &mut Option<crate::Error>) -> RalgResult {
    ralg::minimize(
        |y| match sigma_grad(y, pos, w, mode, hopts) {
            Ok(v) if v.0.is_finite() => v,
            Ok(v) => (f64::INFINITY, v.1),
            Err(e) => {
                failure.get_or_insert(e);
                (f64::INFINITY, vec![0.0; y.len()])
            }
        },
        y0,
        ropts,
    )
}

/// Minimizes σ over distinct T3 positions. Runs the full problem for at most
/// [`WARM_ITER`] iterations and, if that does not converge, continues on the
/// knot set. Returns the per-sample values and the combined solver record.
pub(super) fn fit_t3(pos: &[TreePoint], w: &[f64], y0: Vec<f64>, mode: Mode, hopts: &HullOptions<f64>, ropts: &RalgOptions) -> Result<RalgResult> {
    let mut failure = None;
    let warm = solve(pos, w, y0, mode, hopts, &RalgOptions { max_iter: WARM_ITER.min(ropts.max_iter), ..ropts.clone() }, &mut failure);
    if let Some(e) = failure {
        return Err(e);
    }
    if warm.status != RalgStatus::MaxIter || ropts.max_iter <= WARM_ITER {
        return Ok(warm);
    }
    let lay = layout(pos);
    let mut y = warm.x;
    // a coarse start; the hinge check adds whatever it misses
    let mut knot = vec![false; pos.len()];
    for &i in &lay.at_origin {
        knot[i] = true;
    }
    for ray in &lay.rays {
        let step = ray.len().div_ceil(COARSE_KNOTS).max(1);
        for (s, &(_, i)) in ray.iter().enumerate() {
            knot[i] = s % step == 0 || s + 1 == ray.len();
        }
    }
    let mut total = RalgResult { x: Vec::new(), ..warm };
    let reduced = RalgOptions {
        stall: STALL_WINDOW,
        ftol: STALL_FTOL,
        ..ropts.clone()
    };
    for _ in 0..MAX_ROUNDS {
        let (idx, wk) = lump(&lay, w, &knot);
        let kpos: Vec<TreePoint> = idx.iter().map(|&i| pos[i]).collect();
        let start: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let res = solve(&kpos, &wk, start, mode, hopts, &reduced, &mut failure);
        if let Some(e) = failure {
            return Err(e);
        }
        total.iterations += res.iterations;
        total.evaluations += res.evaluations;
        total.last_step = res.last_step;
        total.trace.extend(&res.trace);
        total.status = res.status.clone();
        total.f = res.f;
        let hk = hull_of(&kpos, &res.x, mode)?;
        y = pos.iter().map(|x| hk.evaluate(x)).collect();
        if res.status != RalgStatus::Converged {
            break;
        }
        let mut add = hinge_violations(&lay, w, &knot, &hk);
        if mode == Mode::Bent {
            // pairs of lifted samples can force a higher origin than the knots do
            let full = hull_of(pos, &y, mode)?;
            if let (Some(a), Some(b)) = (full.origin_value, hk.origin_value) {
                if a > b + 1e-12 {
                    add.extend(full.origin_coef().into_iter().flat_map(|c| c.0.iter().map(|&(i, _)| i as usize)));
                }
            }
        }
        add.retain(|&i| !knot[i]);
        if add.is_empty() {
            break;
        }
        // knots where the reduced optimum does not bend hand their weight on
        knot = vertex_knots(&lay, &hk);
        for i in add {
            knot[i] = true;
        }
    }
    total.x = y;
    Ok(total)
}
