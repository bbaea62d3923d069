//! Dense two-phase simplex for the small equality-constrained LPs of the
//! hull code: maximize c·x subject to A x = b, x ≥ 0.

use crate::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, x: Vec<T> },
    Infeasible,
    Unbounded,
}

impl<T: Scalar> LpOutcome<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

struct Tableau<T> {
    m: usize,
    width: usize,
    t: Vec<T>,
    basis: Vec<usize>,
}

impl<T: Scalar> Tableau<T> {
    #[inline]
    fn at(&self, r: usize, c: usize) -> T {
        self.t[r * self.width + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.at(r, c);
        for k in 0..w {
            self.t[r * w + k] = self.t[r * w + k] / p;
        }
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f.is_zero() {
                continue;
            }
            for k in 0..w {
                let v = self.t[r * w + k];
                self.t[i * w + k] = self.t[i * w + k] - f * v;
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule iterations over columns `< allowed`. `false` if unbounded.
    fn run(&mut self, allowed: usize, eps: T) -> bool {
        let rhs = self.width - 1;
        let z = self.m;
        for _ in 0..10_000 {
            let Some(c) = (0..allowed).find(|&j| self.at(z, j) < -eps) else {
                return true;
            };
            let mut best: Option<(T, usize)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > eps {
                    let ratio = self.at(i, rhs) / a;
                    best = match best {
                        None => Some((ratio, i)),
                        Some((br, bi)) => {
                            if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                                Some((ratio, i))
                            } else {
                                Some((br, bi))
                            }
                        }
                    };
                }
            }
            match best {
                None => return false,
                Some((_, r)) => self.pivot(r, c),
            }
        }
        true
    }
}

/// Maximizes `c·x` subject to `a x = b`, `x ≥ 0`. `a` holds one row per
/// constraint.
pub fn solve_simplex_lp<T: Scalar>(c: &[T], a: &[Vec<T>], b: &[T]) -> LpOutcome<T> {
    let n = c.len();
    let m = a.len();
    let width = n + m + 1;
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .chain(b.iter())
        .fold(T::one(), |s, v| s.max(v.abs()));
    let eps = T::lit(1e-11).max(T::epsilon() * T::lit(256.0)) * scale;
    let feas = T::lit(1e-9).max(T::epsilon() * T::lit(4096.0)) * scale;

    let mut t = vec![T::zero(); (m + 1) * width];
    for i in 0..m {
        let sign = if b[i] < T::zero() { -T::one() } else { T::one() };
        for j in 0..n {
            t[i * width + j] = sign * a[i][j];
        }
        t[i * width + n + i] = T::one();
        t[i * width + width - 1] = sign * b[i];
    }
    // phase 1: maximize −Σ artificials
    for j in 0..width {
        let s: T = (0..m).map(|i| t[i * width + j]).sum();
        t[m * width + j] = if j >= n && j < n + m { T::zero() } else { -s };
    }
    let mut tab = Tableau {
        m,
        width,
        t,
        basis: (n..n + m).collect(),
    };
    tab.run(n + m, eps);
    if -tab.at(m, width - 1) > feas {
        return LpOutcome::Infeasible;
    }
    // drive remaining artificials out of the basis
    for r in 0..m {
        if tab.basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| tab.at(r, j).abs() > eps) {
                tab.pivot(r, j);
            }
        }
    }
    // phase 2
    for j in 0..width {
        tab.t[m * width + j] = if j < n { -c[j] } else { T::zero() };
    }
    for r in 0..m {
        let bc = tab.basis[r];
        let f = tab.at(m, bc);
        if !f.is_zero() {
            for k in 0..width {
                let v = tab.at(r, k);
                tab.t[m * width + k] = tab.t[m * width + k] - f * v;
            }
        }
    }
    if !tab.run(n, eps) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![T::zero(); n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.at(r, width - 1).max(T::zero());
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| *ci * *xi).sum();
    LpOutcome::Optimal { value, x }
}

/// max Σ λ_m y_m over the simplex with Σ λ_m p_m = target in the plane.
/// Returns the value and the (sparse) weights.
pub(crate) fn max_combination<T: Scalar>(pts: &[[T; 2]], ys: &[T], target: [T; 2], minimize: bool) -> Option<(T, Vec<(usize, T)>)> {
    if pts.is_empty() {
        return None;
    }
    let n = pts.len();
    let rows = vec![
        pts.iter().map(|p| p[0]).collect::<Vec<T>>(),
        pts.iter().map(|p| p[1]).collect(),
        vec![T::one(); n],
    ];
    let c: Vec<T> = if minimize { ys.iter().map(|&y| -y).collect() } else { ys.to_vec() };
    match solve_simplex_lp(&c, &rows, &[target[0], target[1], T::one()]) {
        LpOutcome::Optimal { x, .. } => {
            let w: Vec<(usize, T)> = x.into_iter().enumerate().filter(|(_, v)| *v > T::zero()).collect();
            let total: T = w.iter().map(|(_, v)| *v).sum();
            let w: Vec<(usize, T)> = w.into_iter().map(|(i, v)| (i, v / total)).collect();
            let value = w.iter().map(|&(i, v)| v * ys[i]).sum();
            Some((value, w))
        }
        _ => None,
    }
}
