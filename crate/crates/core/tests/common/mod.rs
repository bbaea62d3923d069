//! Independent Euclidean 1D log-concave MLE, used as an oracle.
//!
//! Minimizes −(1/n)Σ y_i + Σ_k Δx_k ∫₀¹ exp(y_k + t(y_{k+1} − y_k)) dt over
//! y with non-increasing slopes, by a log-barrier Newton method. The segment
//! integrals use Gauss–Legendre quadrature rather than closed forms.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 1..=m {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out
}

struct Problem {
    dx: Vec<f64>,
    gl: Vec<(f64, f64)>,
    n: usize,
}

impl Problem {
    /// Objective, gradient and Hessian of the smooth part.
    fn smooth(&self, y: &DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>) {
        let n = self.n;
        let mut f = -y.sum() / n as f64;
        let mut g = DVector::from_element(n, -1.0 / n as f64);
        let mut h = DMatrix::zeros(n, n);
        for k in 0..n - 1 {
            let (a, b) = (y[k], y[k + 1]);
            let (mut j, mut ja, mut jb, mut jaa, mut jab, mut jbb) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for &(t, w) in &self.gl {
                let e = w * (a + t * (b - a)).exp();
                j += e;
                ja += (1.0 - t) * e;
                jb += t * e;
                jaa += (1.0 - t) * (1.0 - t) * e;
                jab += t * (1.0 - t) * e;
                jbb += t * t * e;
            }
            let d = self.dx[k];
            f += d * j;
            g[k] += d * ja;
            g[k + 1] += d * jb;
            h[(k, k)] += d * jaa;
            h[(k, k + 1)] += d * jab;
            h[(k + 1, k)] += d * jab;
            h[(k + 1, k + 1)] += d * jbb;
        }
        (f, g, h)
    }

    /// Concavity constraints c_k(y) = s_k − s_{k+1} ≥ 0 as rows of A y.
    fn constraints(&self) -> DMatrix<f64> {
        let n = self.n;
        let m = n.saturating_sub(2);
        let mut a = DMatrix::zeros(m, n);
        for k in 0..m {
            let (d0, d1) = (self.dx[k], self.dx[k + 1]);
            a[(k, k)] += -1.0 / d0;
            a[(k, k + 1)] += 1.0 / d0 + 1.0 / d1;
            a[(k, k + 2)] += -1.0 / d1;
        }
        a
    }
}

/// Log-concave MLE on the real line for distinct sorted `x`. Returns the
/// log-density values at `x` and the optimal objective.
pub fn euclid_lcmle(x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    assert!(n >= 3);
    assert!(x.windows(2).all(|w| w[1] > w[0]));
    let p = Problem {
        dx: x.windows(2).map(|w| w[1] - w[0]).collect(),
        gl: gauss_legendre(40),
        n,
    };
    let a = p.constraints();
    let mean = x.iter().sum::<f64>() / n as f64;
    let span = x[n - 1] - x[0];
    // strictly concave start
    let mut y = DVector::from_iterator(n, x.iter().map(|&v| -((v - mean) / span).powi(2) - span.ln()));
    let mut t = 1.0;
    let m = a.nrows() as f64;
    let barrier = |y: &DVector<f64>, t: f64| -> f64 {
        let c = &a * y;
        if c.iter().any(|&v| v <= 0.0) {
            return f64::INFINITY;
        }
        t * p.smooth(y).0 - c.iter().map(|v| v.ln()).sum::<f64>()
    };
    while m / t > 1e-13 {
        for _ in 0..200 {
            let (_, g, h) = p.smooth(&y);
            let c = &a * &y;
            let inv: DVector<f64> = c.map(|v| 1.0 / v);
            let gb = &g * t - a.transpose() * &inv;
            let hb = &h * t + a.transpose() * DMatrix::from_diagonal(&inv.component_mul(&inv)) * &a;
            let rhs = -&gb;
            // near the end of the path the Hessian is too ill-conditioned for Cholesky
            let step = match hb.clone().cholesky() {
                Some(c) => c.solve(&rhs),
                None => hb.lu().solve(&rhs).expect("nonsingular"),
            };
            let dec = -gb.dot(&step);
            if dec / 2.0 < 1e-14 {
                break;
            }
            let f0 = barrier(&y, t);
            let mut s = 1.0;
            loop {
                let cand = &y + &step * s;
                let fc = barrier(&cand, t);
                if fc <= f0 - 0.25 * s * dec {
                    y = cand;
                    break;
                }
                s *= 0.5;
                if s < 1e-20 {
                    break;
                }
            }
        }
        t *= 10.0;
    }
    let f = p.smooth(&y).0;
    (y.iter().copied().collect(), f)
}

#[test]
fn gl_integrates_polynomials() {
    let gl = gauss_legendre(10);
    let s: f64 = gl.iter().map(|&(t, w)| w * t.powi(7)).sum();
    assert!((s - 1.0 / 8.0).abs() < 1e-15);
}
