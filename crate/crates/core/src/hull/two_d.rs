//! Skeleton approximation of the concave hull over T4.
//!
//! Starting from the samples, each step adds the points where geodesics
//! between current hull vertices cross the axes or pass through the origin,
//! plus the origin values found by LPs over the 60 three-orthant unfoldings,
//! and rebuilds the upper envelope inside every quadrant.

use crate::error::{Error, Result};
use crate::hull::hull3d::upper_envelope;
use crate::hull::lp::max_combination;
use crate::hull::planar::{in_convex_polygon, polygon_area};
use crate::hull::{Coef, LabeledPoint};
use crate::integrate::{triangle_exp, triangle_exp_grad};
use crate::treespace::petersen::{self, EDGES, N_AXES, N_ORTHANTS};
use crate::treespace::{passage, passage_among, OrthantId, Passage, Space, TreePoint};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HullOptions<T> {
    /// Change in origin interval and axis vertices below which iteration stops.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for HullOptions<T> {
    fn default() -> Self {
        HullOptions {
            tol: T::lit(1e-8),
            max_iter: 5,
        }
    }
}

#[derive(Clone, Debug)]
struct SkPoint<T: Scalar> {
    x: TreePoint<T>,
    y: T,
    coef: Coef<T>,
    fresh: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Interior(usize, usize),
    Axis(usize, usize),
    Origin(usize),
}

#[derive(Clone, Debug)]
struct State<T: Scalar> {
    interior: Vec<Vec<SkPoint<T>>>,
    axes: Vec<Vec<SkPoint<T>>>,
    /// Lowest and highest known origin values.
    origin: Option<[SkPoint<T>; 2]>,
}

/// Upper envelope inside one quadrant, in coordinates (u, v) along its two
/// axes in ascending order.
#[derive(Clone, Debug)]
pub struct OrthantHull<T: Scalar> {
    pub orthant: OrthantId,
    /// Envelope vertices (u, v, y).
    pub points: Vec<[T; 3]>,
    /// Upper faces, counter-clockwise in (u, v).
    pub faces: Vec<[usize; 3]>,
    /// Projection of the envelope (convex, counter-clockwise).
    pub polygon: Vec<[T; 2]>,
    coefs: Vec<Coef<T>>,
    keys: Vec<Key>,
    index: FaceIndex<T>,
}

#[derive(Clone, Debug, Default)]
struct FaceIndex<T> {
    lo: [T; 2],
    cell: [T; 2],
    g: usize,
    buckets: Vec<Vec<u32>>,
}

impl<T: Scalar> OrthantHull<T> {
    fn empty(orthant: OrthantId) -> Self {
        OrthantHull {
            orthant,
            points: Vec::new(),
            faces: Vec::new(),
            polygon: Vec::new(),
            coefs: Vec::new(),
            keys: Vec::new(),
            index: FaceIndex {
                lo: [T::zero(); 2],
                cell: [T::one(); 2],
                g: 0,
                buckets: Vec::new(),
            },
        }
    }

    fn build(orthant: OrthantId, pts: Vec<[T; 3]>, coefs: Vec<Coef<T>>, keys: Vec<Key>) -> Self {
        if pts.is_empty() {
            return Self::empty(orthant);
        }
        let env = upper_envelope(&pts);
        let polygon: Vec<[T; 2]> = env.polygon.iter().map(|&i| [pts[i][0], pts[i][1]]).collect();
        let mut remap = vec![usize::MAX; pts.len()];
        let mut points = Vec::with_capacity(env.vertices.len());
        let mut cs = Vec::with_capacity(env.vertices.len());
        let mut ks = Vec::with_capacity(env.vertices.len());
        for &v in &env.vertices {
            remap[v] = points.len();
            points.push(pts[v]);
            cs.push(coefs[v].clone());
            ks.push(keys[v]);
        }
        let faces = env
            .faces
            .iter()
            .map(|f| [remap[f[0]], remap[f[1]], remap[f[2]]])
            .collect();
        let mut h = OrthantHull {
            orthant,
            points,
            faces,
            polygon,
            coefs: cs,
            keys: ks,
            index: FaceIndex::default(),
        };
        h.index_faces();
        h
    }

    /// Rebuild from stored vertices and faces (coefficients are not kept).
    pub fn from_parts(orthant: OrthantId, points: Vec<[T; 3]>, faces: Vec<[usize; 3]>) -> Self {
        let proj: Vec<[T; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
        let polygon = crate::hull::planar::convex_hull(&proj).into_iter().map(|i| proj[i]).collect();
        let n = points.len();
        let mut h = OrthantHull {
            orthant,
            points,
            faces,
            polygon,
            coefs: vec![Coef::default(); n],
            keys: (0..n).map(|i| Key::Interior(0, i)).collect(),
            index: FaceIndex::default(),
        };
        h.index_faces();
        h
    }

    fn index_faces(&mut self) {
        let nf = self.faces.len();
        if nf == 0 {
            self.index = FaceIndex {
                lo: [T::zero(); 2],
                cell: [T::one(); 2],
                g: 0,
                buckets: Vec::new(),
            };
            return;
        }
        let mut lo = [T::infinity(); 2];
        let mut hi = [T::neg_infinity(); 2];
        for p in &self.points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let g = ((nf as f64).sqrt().ceil() as usize).clamp(1, 64);
        let gt = T::lit(g as f64);
        let cell = [
            ((hi[0] - lo[0]) / gt).max(T::epsilon()),
            ((hi[1] - lo[1]) / gt).max(T::epsilon()),
        ];
        let mut buckets = vec![Vec::new(); g * g];
        let clampi = |x: T| -> usize { x.floor().to_isize().unwrap_or(0).clamp(0, g as isize - 1) as usize };
        for (fi, f) in self.faces.iter().enumerate() {
            let mut flo = [T::infinity(); 2];
            let mut fhi = [T::neg_infinity(); 2];
            for &v in f {
                for k in 0..2 {
                    flo[k] = flo[k].min(self.points[v][k]);
                    fhi[k] = fhi[k].max(self.points[v][k]);
                }
            }
            let (i0, i1) = (clampi((flo[0] - lo[0]) / cell[0]), clampi((fhi[0] - lo[0]) / cell[0]));
            let (j0, j1) = (clampi((flo[1] - lo[1]) / cell[1]), clampi((fhi[1] - lo[1]) / cell[1]));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    buckets[i * g + j].push(fi as u32);
                }
            }
        }
        self.index = FaceIndex { lo, cell, g, buckets };
    }

    /// Projected area of the hull inside this quadrant.
    pub fn area(&self) -> T {
        polygon_area(&self.polygon)
    }

    fn scale(&self) -> T {
        self.polygon
            .iter()
            .fold(T::one(), |s, p| s.max(p[0].abs()).max(p[1].abs()))
    }

    fn face_value(&self, f: &[usize; 3], x: [T; 2], tol: T) -> Option<T> {
        let (a, b, c) = (self.points[f[0]], self.points[f[1]], self.points[f[2]]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if det <= T::zero() {
            return None;
        }
        let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (x[1] - a[1]) * (c[0] - a[0])) / det;
        let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0])) / det;
        let l0 = T::one() - l1 - l2;
        if l0 < -tol || l1 < -tol || l2 < -tol {
            return None;
        }
        Some(l0 * a[2] + l1 * b[2] + l2 * c[2])
    }

    /// Envelope value at quadrant coordinates `x`; −∞ outside the hull.
    pub fn evaluate(&self, x: [T; 2]) -> T {
        if self.points.is_empty() {
            return T::neg_infinity();
        }
        let scale = self.scale();
        let ptol = T::lit(1e-9) * scale;
        if !in_convex_polygon(&self.polygon, x, ptol) {
            return T::neg_infinity();
        }
        if self.index.g > 0 {
            let g = self.index.g as isize;
            let ci = |k: usize| ((x[k] - self.index.lo[k]) / self.index.cell[k]).floor().to_isize().unwrap_or(0).clamp(0, g - 1) as usize;
            let bucket = &self.index.buckets[ci(0) * self.index.g + ci(1)];
            let tol = T::lit(1e-10);
            let mut best: Option<T> = None;
            for &fi in bucket {
                if let Some(v) = self.face_value(&self.faces[fi as usize], x, tol) {
                    best = Some(best.map_or(v, |b: T| b.max(v)));
                }
            }
            if let Some(v) = best {
                return v;
            }
        }
        self.lp_value(x)
    }

    /// max Σλ y over the envelope vertices with Σλ (u, v) = x.
    fn lp_value(&self, x: [T; 2]) -> T {
        let pos: Vec<[T; 2]> = self.points.iter().map(|p| [p[0], p[1]]).collect();
        let ys: Vec<T> = self.points.iter().map(|p| p[2]).collect();
        match max_combination(&pos, &ys, x, false) {
            Some((v, _)) => v,
            None => {
                // boundary points a hair outside the LP's feasibility tolerance
                let scale = self.scale();
                let snap = |c: T| if c.abs() <= T::lit(1e-9) * scale { T::zero() } else { c };
                match max_combination(&pos, &ys, [snap(x[0]), snap(x[1])], false) {
                    Some((v, _)) => v,
                    None => T::neg_infinity(),
                }
            }
        }
    }

    pub fn face_area(&self, f: &[usize; 3]) -> T {
        let (a, b, c) = (self.points[f[0]], self.points[f[1]], self.points[f[2]]);
        ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs() / T::lit(2.0)
    }

    fn shift(&mut self, c: T) {
        for p in &mut self.points {
            p[2] = p[2] + c;
        }
    }
}

/// Approximate concave hull over T4.
#[derive(Clone, Debug)]
pub struct Hull2D<T: Scalar> {
    pub orthants: Vec<OrthantHull<T>>,
    /// Lowest and highest values found at the origin, if it is in the hull.
    pub origin_interval: Option<(T, T)>,
    pub iterations: usize,
    pub converged: bool,
    origin_coef: Option<Coef<T>>,
}

impl<T: Scalar> Hull2D<T> {
    pub fn from_parts(orthants: Vec<OrthantHull<T>>, origin_interval: Option<(T, T)>, iterations: usize, converged: bool) -> Self {
        Hull2D {
            orthants,
            origin_interval,
            iterations,
            converged,
            origin_coef: None,
        }
    }

    /// h̄ at `x`; −∞ outside the hull.
    pub fn evaluate(&self, x: &TreePoint<T>) -> T {
        if x.is_origin() {
            return self.origin_interval.map_or(T::neg_infinity(), |(_, hi)| hi);
        }
        let mut best = T::neg_infinity();
        for o in x.containing_orthants() {
            let h = &self.orthants[o];
            let c = x.coords_in(h.orthant).expect("containing orthant");
            best = best.max(h.evaluate(c));
        }
        best
    }

    /// ∫ exp(h̄) dν.
    pub fn integral_exp(&self) -> T {
        let mut s = T::zero();
        for h in &self.orthants {
            for f in &h.faces {
                s = s + triangle_exp(h.face_area(f), [h.points[f[0]][2], h.points[f[1]][2], h.points[f[2]][2]]);
            }
        }
        s
    }

    /// ∫ exp(h̄) dν and its gradient with respect to the input values.
    pub fn integral_exp_grad(&self, n: usize) -> (T, Vec<T>) {
        let mut g = vec![T::zero(); n];
        let mut s = T::zero();
        for h in &self.orthants {
            for f in &h.faces {
                let v = [h.points[f[0]][2], h.points[f[1]][2], h.points[f[2]][2]];
                let area = h.face_area(f);
                s = s + triangle_exp(area, v);
                let d = triangle_exp_grad(area, v);
                for k in 0..3 {
                    h.coefs[f[k]].scatter(d[k], &mut g);
                }
            }
        }
        (s, g)
    }

    /// Projected hull area per quadrant.
    pub fn areas(&self) -> Vec<T> {
        self.orthants.iter().map(|h| h.area()).collect()
    }

    pub fn total_area(&self) -> T {
        self.areas().into_iter().sum()
    }

    /// Adds `c` to every value.
    pub fn shift(&mut self, c: T) {
        for h in &mut self.orthants {
            h.shift(c);
        }
        if let Some((lo, hi)) = &mut self.origin_interval {
            *lo = *lo + c;
            *hi = *hi + c;
        }
    }

    pub fn origin_coef(&self) -> Option<&Coef<T>> {
        self.origin_coef.as_ref()
    }
}

fn quad_coords<T: Scalar>(o: usize, x: &TreePoint<T>) -> [T; 2] {
    let (i, j) = EDGES[o];
    [x.axis_value(i), x.axis_value(j)]
}

impl<T: Scalar> State<T> {
    fn new(points: &[LabeledPoint<T>]) -> Result<Self> {
        let mut st = State {
            interior: vec![Vec::new(); N_ORTHANTS],
            axes: vec![Vec::new(); N_AXES],
            origin: None,
        };
        for (i, p) in points.iter().enumerate() {
            if p.x.space() != Space::T4 {
                return Err(Error::SpaceMismatch);
            }
            let sp = SkPoint {
                x: p.x,
                y: p.y,
                coef: Coef::unit(i),
                fresh: true,
            };
            if p.x.is_origin() {
                st.offer_origin(sp);
            } else if let Some((a, _)) = p.x.axis() {
                st.axes[a as usize].push(sp);
            } else {
                st.interior[p.x.orthant().unwrap().index()].push(sp);
            }
        }
        Ok(st)
    }

    /// Widens the origin interval with a candidate value; true if it moved.
    fn offer_origin(&mut self, p: SkPoint<T>) -> bool {
        match &mut self.origin {
            None => {
                self.origin = Some([p.clone(), p]);
                true
            }
            Some([lo, hi]) => {
                let mut moved = false;
                if p.y < lo.y {
                    *lo = p.clone();
                    moved = true;
                }
                if p.y > hi.y {
                    *hi = p;
                    moved = true;
                }
                moved
            }
        }
    }

    fn point(&self, k: Key) -> &SkPoint<T> {
        match k {
            Key::Interior(o, i) => &self.interior[o][i],
            Key::Axis(a, i) => &self.axes[a][i],
            Key::Origin(i) => &self.origin.as_ref().unwrap()[i],
        }
    }

    fn orthant_hull(&self, o: usize) -> OrthantHull<T> {
        let (i, j) = EDGES[o];
        let mut pts = Vec::new();
        let mut coefs = Vec::new();
        let mut keys = Vec::new();
        for (k, p) in self.interior[o].iter().enumerate() {
            let c = quad_coords(o, &p.x);
            pts.push([c[0], c[1], p.y]);
            coefs.push(p.coef.clone());
            keys.push(Key::Interior(o, k));
        }
        for (axis, first) in [(i, true), (j, false)] {
            for (k, p) in self.axes[axis as usize].iter().enumerate() {
                let t = p.x.norm();
                pts.push(if first { [t, T::zero(), p.y] } else { [T::zero(), t, p.y] });
                coefs.push(p.coef.clone());
                keys.push(Key::Axis(axis as usize, k));
            }
        }
        // the low origin value lies under the high one and never shapes the envelope
        if let Some([_, hi]) = &self.origin {
            pts.push([T::zero(), T::zero(), hi.y]);
            coefs.push(hi.coef.clone());
            keys.push(Key::Origin(1));
        }
        OrthantHull::build(OrthantId::from_index(Space::T4, o), pts, coefs, keys)
    }

    fn hulls(&self) -> Vec<OrthantHull<T>> {
        (0..N_ORTHANTS).map(|o| self.orthant_hull(o)).collect()
    }

    /// Keeps only the upper-chain points of each axis plane (with the
    /// origin as an anchor at t = 0).
    fn prune_axes(&mut self) {
        let anchor = self.origin.as_ref().map(|o| o[1].y);
        for a in 0..N_AXES {
            let pts = &self.axes[a];
            if pts.len() < 2 {
                continue;
            }
            let mut plane: Vec<[T; 2]> = pts.iter().map(|p| [p.x.norm(), p.y]).collect();
            if let Some(y0) = anchor {
                plane.push([T::zero(), y0]);
            }
            let keep = crate::hull::planar::upper_hull(&plane);
            let mut mask = vec![false; pts.len()];
            for k in keep {
                if k < pts.len() {
                    mask[k] = true;
                }
            }
            let mut k = 0;
            self.axes[a].retain(|_| {
                k += 1;
                mask[k - 1]
            });
        }
    }

    fn axis_signature(&self) -> Vec<Vec<(T, T)>> {
        self.axes
            .iter()
            .map(|v| {
                let mut s: Vec<(T, T)> = v.iter().map(|p| (p.x.norm(), p.y)).collect();
                s.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                s
            })
            .collect()
    }
}

/// Vertices of the current envelopes, each listed once.
fn vertex_keys<T: Scalar>(hulls: &[OrthantHull<T>]) -> Vec<Key> {
    let mut keys: Vec<Key> = hulls.iter().flat_map(|h| h.keys.iter().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

fn triple_bounds<T: Scalar>(st: &State<T>, hulls: &[OrthantHull<T>], all: &[Key]) -> Option<(SkPoint<T>, SkPoint<T>)> {
    let mut best_hi: Option<SkPoint<T>> = None;
    let mut best_lo: Option<SkPoint<T>> = None;
    let e = |m: usize| -> [T; 2] {
        match m {
            0 => [T::one(), T::zero()],
            1 => [T::zero(), T::one()],
            2 => [-T::one(), T::zero()],
            _ => [T::zero(), -T::one()],
        }
    };
    // dense ids into `all` (sorted), per orthant
    let ids: Vec<Vec<usize>> = hulls
        .iter()
        .map(|h| h.keys.iter().map(|k| all.binary_search(k).expect("vertex key")).collect())
        .collect();
    let mut stamp = vec![usize::MAX; all.len()];
    for (t, ch) in petersen::triples().iter().enumerate() {
        let v = ch.vertices();
        let seq = ch.orthant_seq();
        // skip unfoldings that cannot surround the origin
        if seq.iter().filter(|&&o| !hulls[o].points.is_empty()).count() < 2 {
            continue;
        }
        let mut keys: Vec<Key> = Vec::new();
        for &o in &seq {
            for &id in &ids[o] {
                if stamp[id] != t {
                    stamp[id] = t;
                    keys.push(all[id]);
                }
            }
        }
        let pos: Vec<[T; 2]> = keys
            .iter()
            .map(|&k| {
                let x = &st.point(k).x;
                let mut p = [T::zero(); 2];
                for (m, &a) in v.iter().enumerate() {
                    let t = x.axis_value(a);
                    let d = e(m);
                    p[0] = p[0] + t * d[0];
                    p[1] = p[1] + t * d[1];
                }
                p
            })
            .collect();
        let ys: Vec<T> = keys.iter().map(|&k| st.point(k).y).collect();
        for minimize in [false, true] {
            if let Some((val, w)) = max_combination(&pos, &ys, [T::zero(), T::zero()], minimize) {
                let parts: Vec<(T, &Coef<T>)> = w.iter().map(|&(i, l)| (l, &st.point(keys[i]).coef)).collect();
                let sp = SkPoint {
                    x: TreePoint::origin(Space::T4),
                    y: val,
                    coef: Coef::combine(&parts),
                    fresh: true,
                };
                let slot = if minimize { &mut best_lo } else { &mut best_hi };
                let better = match slot {
                    None => true,
                    Some(b) => (minimize && val < b.y) || (!minimize && val > b.y),
                };
                if better {
                    *slot = Some(sp);
                }
            }
        }
    }
    match (best_lo, best_hi) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        _ => None,
    }
}

/// Crossing points of geodesics between vertex pairs with at least one
/// fresh end. Returns (new axis points, origin candidates). Axis crossings
/// below the upper chain of their axis plane are dropped here already.
fn pair_crossings<T: Scalar>(st: &State<T>, keys: &[Key]) -> (Vec<(usize, SkPoint<T>)>, Vec<SkPoint<T>>) {
    let pts: Vec<&SkPoint<T>> = keys.iter().map(|&k| st.point(k)).collect();
    let norms: Vec<T> = pts.iter().map(|p| p.x.norm()).collect();
    // group by location: interior of quadrant o -> o, axis a -> 15 + a
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); N_ORTHANTS + N_AXES];
    for (i, p) in pts.iter().enumerate() {
        if p.x.is_origin() {
            continue;
        }
        let g = match p.x.axis() {
            Some((a, _)) => N_ORTHANTS + a as usize,
            None => p.x.orthant().unwrap().index(),
        };
        groups[g].push(i);
    }
    // per axis: (t, y, a, b, lam)
    let mut cand: Vec<Vec<(T, T, usize, usize, T)>> = vec![Vec::new(); N_AXES];
    let mut buf: Vec<(u8, T, T)> = Vec::with_capacity(4);
    let mut best_origin: Option<(T, usize, usize, T)> = None;
    let mut offer = |y: T, a: usize, b: usize, lam: T| {
        if best_origin.map_or(true, |o| y > o.0) {
            best_origin = Some((y, a, b, lam));
        }
    };
    for g1 in 0..groups.len() {
        for g2 in g1..groups.len() {
            let (ga, gb) = (&groups[g1], &groups[g2]);
            if ga.is_empty() || gb.is_empty() {
                continue;
            }
            match relation(g1, g2) {
                Relation::Inside => {}
                Relation::Cone => {
                    for &a in ga {
                        for &b in gb {
                            let (p, q) = (pts[a], pts[b]);
                            if !(p.fresh || q.fresh) {
                                continue;
                            }
                            let lam = norms[a] / (norms[a] + norms[b]);
                            offer((T::one() - lam) * p.y + lam * q.y, a, b, lam);
                        }
                    }
                }
                Relation::Among(chains) => {
                    for &a in ga {
                        for &b in gb {
                            let (p, q) = (pts[a], pts[b]);
                            if !(p.fresh || q.fresh) {
                                continue;
                            }
                            buf.clear();
                            match passage_among(&chains, &p.x, &q.x, norms[a], norms[b], &mut buf) {
                                Passage::Inside => {}
                                Passage::Axes => {
                                    for &(axis, r, lam) in &buf {
                                        let y = (T::one() - lam) * p.y + lam * q.y;
                                        cand[axis as usize].push((r, y, a, b, lam));
                                    }
                                }
                                Passage::Origin(lam) => offer((T::one() - lam) * p.y + lam * q.y, a, b, lam),
                            }
                        }
                    }
                }
            }
        }
    }
    let mut axis_new = Vec::new();
    for (axis, c) in cand.iter_mut().enumerate() {
        if c.is_empty() {
            continue;
        }
        let old = &st.axes[axis];
        let old_plane: Vec<[T; 2]> = old.iter().map(|p| [p.x.norm(), p.y]).collect();
        prefilter_upper(c, &old_plane);
        let mut plane = old_plane;
        plane.extend(c.iter().map(|&(r, y, ..)| [r, y]));
        for k in crate::hull::planar::upper_hull(&plane) {
            if k < old.len() {
                continue;
            }
            let (r, y, a, b, lam) = c[k - old.len()];
            axis_new.push((
                axis,
                SkPoint {
                    x: TreePoint::on_axis(axis as u8, r).expect("axis"),
                    y,
                    coef: Coef::mix(T::one() - lam, &pts[a].coef, lam, &pts[b].coef),
                    fresh: true,
                },
            ));
        }
    }
    let mut origin_new = Vec::new();
    if let Some((y, a, b, lam)) = best_origin {
        origin_new.push(SkPoint {
            x: TreePoint::origin(Space::T4),
            y,
            coef: Coef::mix(T::one() - lam, &pts[a].coef, lam, &pts[b].coef),
            fresh: true,
        });
    }
    (axis_new, origin_new)
}

enum Relation {
    /// Every pair shares a closed quadrant.
    Inside,
    /// Every pair is joined by a cone path.
    Cone,
    /// Candidate unfoldings for every pair.
    Among(Vec<&'static petersen::Chain>),
}

/// How geodesics between two location groups (see `pair_crossings`) behave.
fn relation(g1: usize, g2: usize) -> Relation {
    let quads = |g: usize| -> ([usize; 3], usize) {
        if g < N_ORTHANTS {
            ([g, 0, 0], 1)
        } else {
            (petersen::axis_orthants((g - N_ORTHANTS) as u8), 3)
        }
    };
    let (ca, na) = quads(g1);
    let (cb, nb) = quads(g2);
    if ca[..na].iter().any(|o| cb[..nb].contains(o)) {
        return Relation::Inside;
    }
    let mut chains = Vec::new();
    for &a in &ca[..na] {
        for &b in &cb[..nb] {
            chains.extend(petersen::short_chains(a, b));
        }
    }
    if chains.is_empty() {
        Relation::Cone
    } else {
        Relation::Among(chains)
    }
}

/// Drops candidates that lie strictly below the upper chain of a subset
/// (per-bucket maxima plus `extra`); they cannot be upper-chain vertices.
fn prefilter_upper<T: Scalar, E: Copy>(c: &mut Vec<(T, T, E, E, T)>, extra: &[[T; 2]]) {
    const BUCKETS: usize = 256;
    if c.len() < 4 * BUCKETS {
        return;
    }
    let (lo, hi) = c.iter().fold((c[0].0, c[0].0), |(l, h), v| (l.min(v.0), h.max(v.0)));
    if !(hi > lo) {
        return;
    }
    let width = (hi - lo) / T::lit(BUCKETS as f64);
    let mut best: Vec<Option<[T; 2]>> = vec![None; BUCKETS];
    for v in c.iter() {
        let k = ((v.0 - lo) / width).to_usize().unwrap_or(0).min(BUCKETS - 1);
        if best[k].map_or(true, |b| v.1 > b[1]) {
            best[k] = Some([v.0, v.1]);
        }
    }
    let mut sub: Vec<[T; 2]> = best.into_iter().flatten().collect();
    sub.extend_from_slice(extra);
    let chain: Vec<[T; 2]> = crate::hull::planar::upper_hull(&sub).into_iter().map(|i| sub[i]).collect();
    if chain.len() < 2 {
        return;
    }
    let below = |r: T, y: T| -> bool {
        if r <= chain[0][0] || r >= chain[chain.len() - 1][0] {
            return false;
        }
        let k = chain.partition_point(|p| p[0] <= r);
        let (a, b) = (chain[k - 1], chain[k]);
        let h = a[1] + (b[1] - a[1]) * (r - a[0]) / (b[0] - a[0]);
        y < h - T::snap() * (T::one() + h.abs())
    };
    c.retain(|v| !below(v.0, v.1));
}

/// Origin interval implied by the samples alone: LPs over the 60
/// three-orthant unfoldings combined with cone paths between sample pairs.
/// `None` when no unfolding and no cone path reaches the origin.
pub fn origin_bounds_lp<T: Scalar>(points: &[LabeledPoint<T>]) -> Option<(T, T)> {
    let st = State::new(points).ok()?;
    let hulls = st.hulls();
    let mut lo: Option<T> = st.origin.as_ref().map(|o| o[0].y);
    let mut hi: Option<T> = st.origin.as_ref().map(|o| o[1].y);
    let mut offer = |y: T| {
        lo = Some(lo.map_or(y, |v| v.min(y)));
        hi = Some(hi.map_or(y, |v| v.max(y)));
    };
    if let Some((l, h)) = triple_bounds(&st, &hulls, &vertex_keys(&hulls)) {
        offer(l.y);
        offer(h.y);
    }
    let keys = vertex_keys(&hulls);
    let mut buf = Vec::new();
    for a in 0..keys.len() {
        for b in (a + 1)..keys.len() {
            let (p, q) = (st.point(keys[a]), st.point(keys[b]));
            if p.x.is_origin() || q.x.is_origin() {
                continue;
            }
            buf.clear();
            if let Passage::Origin(l) = passage(&p.x, &q.x, &mut buf) {
                offer((T::one() - l) * p.y + l * q.y);
            }
        }
    }
    lo.zip(hi)
}

/// Skeleton approximation of the least concave majorant of `points` on T4.
pub fn hull_2d<T: Scalar>(points: &[LabeledPoint<T>], opts: &HullOptions<T>) -> Result<Hull2D<T>> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    let mut st = State::new(points)?;
    st.prune_axes();
    let mut hulls = st.hulls();
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let before_axes = st.axis_signature();
        let before_origin = st.origin.as_ref().map(|o| (o[0].y, o[1].y));

        let keys = vertex_keys(&hulls);
        let bounds = triple_bounds(&st, &hulls, &keys);
        let prev_axes: Vec<Vec<(T, T)>> = st.axes.iter().map(|v| v.iter().map(|p| (p.x.norm(), p.y)).collect()).collect();
        let prev_hi = st.origin.as_ref().map(|o| o[1].y);
        let (axis_new, origin_new) = pair_crossings(&st, &keys);

        // only points added by this step pair up in the next one
        for v in st.interior.iter_mut().chain(st.axes.iter_mut()) {
            for p in v.iter_mut() {
                p.fresh = false;
            }
        }
        if let Some((lo, hi)) = bounds {
            st.offer_origin(lo);
            st.offer_origin(hi);
        }
        for o in origin_new {
            st.offer_origin(o);
        }
        for (a, p) in axis_new {
            st.axes[a].push(p);
        }
        st.prune_axes();
        // interior points never change, so a quadrant is rebuilt only when
        // one of its axes or the origin's high value moved
        let hi_moved = st.origin.as_ref().map(|o| o[1].y) != prev_hi;
        let axis_moved: Vec<bool> = st
            .axes
            .iter()
            .zip(&prev_axes)
            .map(|(v, old)| v.len() != old.len() || v.iter().zip(old).any(|(p, o)| (p.x.norm(), p.y) != *o))
            .collect();
        for (o, &(i, j)) in EDGES.iter().enumerate() {
            if hi_moved || axis_moved[i as usize] || axis_moved[j as usize] {
                hulls[o] = st.orthant_hull(o);
            }
        }

        let after_axes = st.axis_signature();
        let after_origin = st.origin.as_ref().map(|o| (o[0].y, o[1].y));
        let changed = signature_changed(&before_axes, &after_axes, opts.tol)
            || match (before_origin, after_origin) {
                (None, None) => false,
                (Some(a), Some(b)) => (a.0 - b.0).abs() > opts.tol || (a.1 - b.1).abs() > opts.tol,
                _ => true,
            };
        if !changed {
            converged = true;
            break;
        }
        iterations += 1;
    }
    let origin_interval = st.origin.as_ref().map(|o| (o[0].y, o[1].y));
    let origin_coef = st.origin.as_ref().map(|o| o[1].coef.clone());
    Ok(Hull2D {
        orthants: hulls,
        origin_interval,
        iterations,
        converged,
        origin_coef,
    })
}

fn signature_changed<T: Scalar>(a: &[Vec<(T, T)>], b: &[Vec<(T, T)>], tol: T) -> bool {
    let near = |p: &(T, T), set: &[(T, T)]| set.iter().any(|q| (p.0 - q.0).abs() <= tol && (p.1 - q.1).abs() <= tol);
    a.iter()
        .zip(b)
        .any(|(x, y)| x.iter().any(|p| !near(p, y)) || y.iter().any(|p| !near(p, x)))
}
