//! Shor's r-algorithm with space dilation in the direction of subgradient
//! differences, adaptive step along each direction (ralgb5 variant).

#[derive(Clone, Debug)]
pub struct RalgOptions {
    pub alpha: f64,
    pub h0: f64,
    pub q1: f64,
    pub q2: f64,
    pub nh: usize,
    pub max_iter: usize,
    /// Stop when both the last decrease and the last step fall below these.
    pub ftol: f64,
    pub xtol: f64,
    /// Also stop when the best value improved by less than `ftol` per
    /// iteration on average over this many iterations (0 disables).
    pub stall: usize,
    /// Abort when the best iterate leaves this box.
    pub x_max: f64,
}

impl Default for RalgOptions {
    fn default() -> Self {
        RalgOptions {
            alpha: 4.0,
            h0: 0.01,
            q1: 1.0,
            q2: 1.1,
            nh: 3,
            max_iter: 5000,
            ftol: 1e-8,
            xtol: 1e-8,
            stall: 0,
            x_max: f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RalgStatus {
    Converged,
    MaxIter,
    /// Best iterate left the box; carries its sup-norm.
    Escaped(f64),
}

#[derive(Clone, Debug)]
pub struct RalgResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub last_step: f64,
    pub status: RalgStatus,
    /// Best objective after each iteration.
    pub trace: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizes a convex function given value and subgradient.
pub fn minimize<F>(mut fg: F, x0: Vec<f64>, opts: &RalgOptions) -> RalgResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (f0, mut g0) = fg(&x);
    let mut evaluations = 1;
    let mut best_x = x.clone();
    let mut best_f = f0;
    let mut trace = Vec::new();
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if norm(&g0) == 0.0 || n == 0 {
        return RalgResult {
            x,
            f: f0,
            iterations: 0,
            evaluations,
            last_step: 0.0,
            status: RalgStatus::Converged,
            trace,
        };
    }
    // B stored row-major, B[i][j] = b[i * n + j]
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        b[i * n + i] = 1.0;
    }
    let mut hs = opts.h0;
    let mut g1 = vec![0.0; n];
    let mut dx = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut br = vec![0.0; n];
    let mut last_step = 0.0;
    let mut status = RalgStatus::MaxIter;
    let mut iterations = 0;
    for _ in 0..opts.max_iter {
        iterations += 1;
        let f_before = best_f;
        // g1 = Bᵀ g0
        for j in 0..n {
            g1[j] = 0.0;
        }
        for i in 0..n {
            let gi = g0[i];
            if gi != 0.0 {
                let row = &b[i * n..(i + 1) * n];
                for j in 0..n {
                    g1[j] += row[j] * gi;
                }
            }
        }
        let ng = norm(&g1);
        if ng < 1e-300 {
            status = RalgStatus::Converged;
            break;
        }
        for i in 0..n {
            dx[i] = dot(&b[i * n..(i + 1) * n], &g1) / ng;
        }
        let ndx = norm(&dx);
        let mut d = 1.0;
        let mut ls = 0;
        let mut ddx = 0.0;
        let mut gnew = g0.clone();
        while d > 0.0 {
            for i in 0..n {
                x[i] -= hs * dx[i];
            }
            ddx += hs * ndx;
            let (f, g) = fg(&x);
            evaluations += 1;
            if f < best_f {
                best_f = f;
                best_x.copy_from_slice(&x);
            }
            gnew = g;
            ls += 1;
            if ls % opts.nh == 0 {
                hs *= opts.q2;
            }
            if ls > 500 {
                break;
            }
            d = dot(&dx, &gnew);
        }
        if ls == 1 {
            hs *= opts.q1;
        }
        last_step = ddx;
        trace.push(best_f);
        let xs = sup(&best_x);
        if xs > opts.x_max {
            status = RalgStatus::Escaped(xs);
            break;
        }
        if (f_before - best_f) < opts.ftol && ddx < opts.xtol {
            status = RalgStatus::Converged;
            break;
        }
        if opts.stall > 0 && trace.len() > opts.stall && trace[trace.len() - 1 - opts.stall] - best_f < opts.ftol * opts.stall as f64 {
            status = RalgStatus::Converged;
            break;
        }
        // space dilation along r = Bᵀ(gnew − g0)
        for j in 0..n {
            r[j] = 0.0;
        }
        for i in 0..n {
            let di = gnew[i] - g0[i];
            if di != 0.0 {
                let row = &b[i * n..(i + 1) * n];
                for j in 0..n {
                    r[j] += row[j] * di;
                }
            }
        }
        let nr = norm(&r);
        if nr > 1e-300 {
            for v in r.iter_mut() {
                *v /= nr;
            }
            for i in 0..n {
                br[i] = dot(&b[i * n..(i + 1) * n], &r);
            }
            let c = 1.0 / opts.alpha - 1.0;
            for i in 0..n {
                let s = c * br[i];
                let row = &mut b[i * n..(i + 1) * n];
                for j in 0..n {
                    row[j] += s * r[j];
                }
            }
        }
        g0 = gnew;
    }
    RalgResult {
        x: best_x,
        f: best_f,
        iterations,
        evaluations,
        last_step,
        status,
        trace,
    }
}
