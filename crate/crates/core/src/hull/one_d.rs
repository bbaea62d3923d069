use crate::error::{Error, Result};
use crate::hull::planar::upper_hull;
use crate::hull::{Coef, LabeledPoint, Mode};
use crate::integrate::{segment_exp, segment_exp_grad};
use crate::treespace::{OrthantId, Space, TreePoint};
use crate::Scalar;

/// Least concave majorant on T3: a concave chain on each half-line, tied
/// together by a common value at the origin.
#[derive(Clone, Debug)]
pub struct ConcavePWL1D<T: Scalar> {
    pub mode: Mode,
    /// Breakpoints (position, value) per half-line, ascending in position.
    pub branches: [Vec<(T, T)>; 3],
    pub origin_value: Option<T>,
    coefs: [Vec<Coef<T>>; 3],
    origin_coef: Option<Coef<T>>,
}

struct Split<T> {
    rays: [Vec<(T, T, usize)>; 3],
    at_origin: Vec<(T, usize)>,
}

fn split<T: Scalar>(points: &[LabeledPoint<T>]) -> Result<Split<T>> {
    let mut rays: [Vec<(T, T, usize)>; 3] = Default::default();
    let mut at_origin = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if p.x.space() != Space::T3 {
            return Err(Error::SpaceMismatch);
        }
        match p.x.orthant() {
            None => at_origin.push((p.y, i)),
            Some(OrthantId::Ray(k)) => rays[k as usize].push((p.x.norm(), p.y, i)),
            Some(_) => return Err(Error::SpaceMismatch),
        }
    }
    Ok(Split { rays, at_origin })
}

/// Value forced at the origin by pairs of samples on different half-lines.
///
/// Errors with [`Error::SingleOrthant`] when fewer than two half-lines hold
/// samples.
pub fn origin_value_1d<T: Scalar>(points: &[LabeledPoint<T>], mode: Mode) -> Result<T> {
    let s = split(points)?;
    origin_from_rays(&s.rays, mode).map(|(v, _)| v).ok_or(Error::SingleOrthant)
}

fn origin_from_rays<T: Scalar>(rays: &[Vec<(T, T, usize)>; 3], mode: Mode) -> Option<(T, Coef<T>)> {
    let mut best: Option<(T, Coef<T>)> = None;
    for a in 0..3 {
        for b in (a + 1)..3 {
            if rays[a].is_empty() || rays[b].is_empty() {
                continue;
            }
            let cand = match mode {
                Mode::LogConcave => cone_max(&rays[a], &rays[b]),
                Mode::Bent => bent_max(&rays[a], &rays[b]),
            };
            if best.as_ref().map_or(true, |(v, _)| cand.0 > *v) {
                best = Some(cand);
            }
        }
    }
    best
}

/// max over i in `a`, j in `b` of (r_j y_i + r_i y_j)/(r_i + r_j): the upper
/// hull of `a` mirrored to negative positions together with `b`, read at 0.
fn cone_max<T: Scalar>(a: &[(T, T, usize)], b: &[(T, T, usize)]) -> (T, Coef<T>) {
    let pts: Vec<[T; 2]> = a
        .iter()
        .map(|&(r, y, _)| [-r, y])
        .chain(b.iter().map(|&(r, y, _)| [r, y]))
        .collect();
    let h = upper_hull(&pts);
    for w in h.windows(2) {
        let (p, q) = (pts[w[0]], pts[w[1]]);
        if p[0] < T::zero() && q[0] > T::zero() {
            let (i, j) = (a[w[0]].2, b[w[1] - a.len()].2);
            let (ri, rj) = (-p[0], q[0]);
            let wi = rj / (ri + rj);
            let wj = ri / (ri + rj);
            let v = wi * p[1] + wj * q[1];
            return (v, Coef::mix(wi, &Coef::unit(i), wj, &Coef::unit(j)));
        }
    }
    unreachable!("both sides are nonempty with positive radii")
}

fn bent_max<T: Scalar>(a: &[(T, T, usize)], b: &[(T, T, usize)]) -> (T, Coef<T>) {
    let two = T::lit(2.0);
    let mut best = (T::neg_infinity(), 0, 0, T::zero(), T::zero());
    for &(ri, yi, i) in a {
        for &(rj, yj, j) in b {
            let lam = ri / (ri + rj);
            let (w1i, w1j) = (two * (T::one() - lam) / (two - lam), lam / (two - lam));
            let (w2i, w2j) = ((T::one() - lam) / (T::one() + lam), two * lam / (T::one() + lam));
            let v1 = w1i * yi + w1j * yj;
            let v2 = w2i * yi + w2j * yj;
            let (v, wi, wj) = if v1 <= v2 { (v1, w1i, w1j) } else { (v2, w2i, w2j) };
            if v > best.0 {
                best = (v, i, j, wi, wj);
            }
        }
    }
    let (v, i, j, wi, wj) = best;
    (v, Coef::mix(wi, &Coef::unit(i), wj, &Coef::unit(j)))
}

/// Least concave majorant of `points` on T3 (bent class with `Mode::Bent`).
pub fn concave_hull_1d<T: Scalar>(points: &[LabeledPoint<T>], mode: Mode) -> Result<ConcavePWL1D<T>> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    let s = split(points)?;
    let mut origin = origin_from_rays(&s.rays, mode);
    for &(y, i) in &s.at_origin {
        if origin.as_ref().map_or(true, |(v, _)| y > *v) {
            origin = Some((y, Coef::unit(i)));
        }
    }
    let mut branches: [Vec<(T, T)>; 3] = Default::default();
    let mut coefs: [Vec<Coef<T>>; 3] = Default::default();
    for k in 0..3 {
        let ray = &s.rays[k];
        if ray.is_empty() {
            continue;
        }
        let mut pts: Vec<[T; 2]> = ray.iter().map(|&(r, y, _)| [r, y]).collect();
        let mut cs: Vec<Coef<T>> = ray.iter().map(|&(_, _, i)| Coef::unit(i)).collect();
        if let Some((y0, c0)) = &origin {
            pts.push([T::zero(), *y0]);
            cs.push(c0.clone());
        }
        for i in upper_hull(&pts) {
            branches[k].push((pts[i][0], pts[i][1]));
            coefs[k].push(cs[i].clone());
        }
    }
    let (origin_value, origin_coef) = match origin {
        Some((v, c)) => (Some(v), Some(c)),
        None => (None, None),
    };
    Ok(ConcavePWL1D {
        mode,
        branches,
        origin_value,
        coefs,
        origin_coef,
    })
}

impl<T: Scalar> ConcavePWL1D<T> {
    /// Value of the majorant at `x`; −∞ outside its domain.
    pub fn evaluate(&self, x: &TreePoint<T>) -> T {
        let Some(OrthantId::Ray(k)) = x.orthant() else {
            return self.origin_value.unwrap_or(T::neg_infinity());
        };
        let b = &self.branches[k as usize];
        if b.is_empty() {
            return T::neg_infinity();
        }
        let r = x.norm();
        let (lo, hi) = (b[0].0, b[b.len() - 1].0);
        let tol = T::snap() * (T::one() + hi);
        if r < lo - tol || r > hi + tol {
            return T::neg_infinity();
        }
        if b.len() == 1 {
            return b[0].1;
        }
        let s = b.partition_point(|&(t, _)| t < r).clamp(1, b.len() - 1);
        let ((t0, y0), (t1, y1)) = (b[s - 1], b[s]);
        let w = ((r - t0) / (t1 - t0)).max(T::zero()).min(T::one());
        y0 + w * (y1 - y0)
    }

    /// ∫ exp(h) dν.
    pub fn integral_exp(&self) -> T {
        let mut s = T::zero();
        for b in &self.branches {
            for w in b.windows(2) {
                s = s + segment_exp(w[1].0 - w[0].0, w[0].1, w[1].1);
            }
        }
        s
    }

    /// ∫ exp(h) dν and its gradient with respect to the input values.
    pub fn integral_exp_grad(&self, n: usize) -> (T, Vec<T>) {
        let mut g = vec![T::zero(); n];
        let mut s = T::zero();
        for (b, c) in self.branches.iter().zip(&self.coefs) {
            for k in 1..b.len() {
                let (len, a, v) = (b[k].0 - b[k - 1].0, b[k - 1].1, b[k].1);
                s = s + segment_exp(len, a, v);
                let d = segment_exp_grad(len, a, v);
                c[k - 1].scatter(d[0], &mut g);
                c[k].scatter(d[1], &mut g);
            }
        }
        (s, g)
    }

    /// Adds `c` to every value (the shape is unchanged).
    pub fn shift(&mut self, c: T) {
        for b in &mut self.branches {
            for v in b.iter_mut() {
                v.1 = v.1 + c;
            }
        }
        if let Some(v) = &mut self.origin_value {
            *v = *v + c;
        }
    }

    /// Upper end of the domain on each half-line (None if empty).
    pub fn extent(&self) -> [Option<T>; 3] {
        [0, 1, 2].map(|k| self.branches[k].last().map(|v| v.0))
    }

    pub fn origin_coef(&self) -> Option<&Coef<T>> {
        self.origin_coef.as_ref()
    }

    /// Rebuild from serialised breakpoints (coefficients are not restored).
    pub fn from_parts(mode: Mode, branches: [Vec<(T, T)>; 3], origin_value: Option<T>) -> Self {
        let coefs = [0, 1, 2].map(|k| vec![Coef::default(); branches[k].len()]);
        ConcavePWL1D {
            mode,
            branches,
            origin_value,
            coefs,
            origin_coef: None,
        }
    }
}
