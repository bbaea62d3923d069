//! Points of the tree spaces T3 and T4, geodesics and distances.
//!
//! T3 is three half-lines glued at the origin. T4 is fifteen quadrants glued
//! along ten axes following the Petersen graph (see [`petersen`]).

pub mod petersen;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;
use petersen::{Chain, EDGES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    T3,
    T4,
}

impl Space {
    pub fn dim(self) -> usize {
        match self {
            Space::T3 => 1,
            Space::T4 => 2,
        }
    }

    pub fn n_orthants(self) -> usize {
        match self {
            Space::T3 => 3,
            Space::T4 => petersen::N_ORTHANTS,
        }
    }

    /// All orthants in ascending order.
    pub fn orthants(self) -> Vec<OrthantId> {
        match self {
            Space::T3 => (0..3).map(OrthantId::Ray).collect(),
            Space::T4 => EDGES.iter().map(|&(i, j)| OrthantId::Quad(i, j)).collect(),
        }
    }
}

/// Orthant of T3 (a half-line `Ray(k)`, k in 0..3) or T4 (a quadrant
/// `Quad(i, j)`, i < j, {i, j} a Petersen edge).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "OrthantJson", into = "OrthantJson")]
pub enum OrthantId {
    Ray(u8),
    Quad(u8, u8),
}

impl OrthantId {
    pub fn ray(k: u8) -> Result<Self> {
        if k < 3 {
            Ok(OrthantId::Ray(k))
        } else {
            Err(Error::InvalidOrthant(format!("T3 orthant {k}")))
        }
    }

    pub fn quad(i: u8, j: u8) -> Result<Self> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if petersen::adjacent(a, b) {
            Ok(OrthantId::Quad(a, b))
        } else {
            Err(Error::InvalidOrthant(format!("{{{i},{j}}} is not a Petersen edge")))
        }
    }

    pub fn space(self) -> Space {
        match self {
            OrthantId::Ray(_) => Space::T3,
            OrthantId::Quad(..) => Space::T4,
        }
    }

    /// Dense index in `0..space.n_orthants()`.
    pub fn index(self) -> usize {
        match self {
            OrthantId::Ray(k) => k as usize,
            OrthantId::Quad(i, j) => petersen::edge_index(i, j).expect("valid quadrant"),
        }
    }

    pub fn from_index(space: Space, idx: usize) -> Self {
        match space {
            Space::T3 => OrthantId::Ray(idx as u8),
            Space::T4 => {
                let (i, j) = EDGES[idx];
                OrthantId::Quad(i, j)
            }
        }
    }

    pub fn has_axis(self, axis: u8) -> bool {
        match self {
            OrthantId::Ray(_) => false,
            OrthantId::Quad(i, j) => i == axis || j == axis,
        }
    }
}

/// A point of T3 or T4 in canonical form.
///
/// The origin has `orthant == None`. A T4 point with one zero coordinate is
/// stored in the lowest orthant containing its axis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(
    try_from = "PointJson<T>",
    into = "PointJson<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct TreePoint<T: Scalar> {
    space: Space,
    orthant: Option<OrthantId>,
    coords: [T; 2],
}

impl<T: Scalar> TreePoint<T> {
    pub fn origin(space: Space) -> Self {
        TreePoint {
            space,
            orthant: None,
            coords: [T::zero(); 2],
        }
    }

    /// Point at distance `r` from the origin on half-line `k` of T3.
    pub fn t3(k: u8, r: T) -> Result<Self> {
        let o = OrthantId::ray(k)?;
        Self::new(Space::T3, Some(o), &[r])
    }

    /// T4 point in quadrant {i, j}; `c` is ordered by ascending axis.
    pub fn t4(i: u8, j: u8, c: [T; 2]) -> Result<Self> {
        let o = OrthantId::quad(i, j)?;
        Self::new(Space::T4, Some(o), &c)
    }

    /// Point at distance `t` along `axis` of T4.
    pub fn on_axis(axis: u8, t: T) -> Result<Self> {
        if axis as usize >= petersen::N_AXES {
            return Err(Error::InvalidOrthant(format!("axis {axis}")));
        }
        let o = petersen::axis_orthants(axis)[0];
        let (i, j) = EDGES[o];
        let c = if i == axis { [t, T::zero()] } else { [T::zero(), t] };
        Self::new(Space::T4, Some(OrthantId::Quad(i, j)), &c)
    }

    pub fn new(space: Space, orthant: Option<OrthantId>, coords: &[T]) -> Result<Self> {
        let Some(o) = orthant else {
            if coords.iter().any(|c| !c.is_zero()) {
                return Err(Error::InvalidCoords("origin with nonzero coords".into()));
            }
            return Ok(Self::origin(space));
        };
        if o.space() != space {
            return Err(Error::SpaceMismatch);
        }
        if coords.len() != space.dim() {
            return Err(Error::InvalidCoords(format!(
                "expected {} coordinates, got {}",
                space.dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|&c| !(c >= T::zero()) || !c.is_finite()) {
            return Err(Error::InvalidCoords("coordinates must be finite and >= 0".into()));
        }
        match o {
            OrthantId::Ray(k) => {
                if k >= 3 {
                    return Err(Error::InvalidOrthant(format!("T3 orthant {k}")));
                }
            }
            OrthantId::Quad(i, j) => {
                if i >= j || !petersen::adjacent(i, j) {
                    return Err(Error::InvalidOrthant(format!("{{{i},{j}}}")));
                }
            }
        }
        let mut c = [T::zero(); 2];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self::canonical(space, o, c))
    }

    fn canonical(space: Space, o: OrthantId, c: [T; 2]) -> Self {
        match o {
            OrthantId::Ray(_) => {
                if c[0].is_zero() {
                    Self::origin(space)
                } else {
                    TreePoint { space, orthant: Some(o), coords: [c[0], T::zero()] }
                }
            }
            OrthantId::Quad(i, j) => {
                let (zi, zj) = (c[0].is_zero(), c[1].is_zero());
                if zi && zj {
                    return Self::origin(space);
                }
                if !zi && !zj {
                    return TreePoint { space, orthant: Some(o), coords: c };
                }
                let (axis, t) = if zi { (j, c[1]) } else { (i, c[0]) };
                let (a, b) = EDGES[petersen::axis_orthants(axis)[0]];
                let cc = if a == axis { [t, T::zero()] } else { [T::zero(), t] };
                TreePoint {
                    space,
                    orthant: Some(OrthantId::Quad(a, b)),
                    coords: cc,
                }
            }
        }
    }

    /// Coordinates in the closed orthant `o`, snapping values below the
    /// boundary tolerance to zero. On a T3 ray only `c[0]` is used.
    pub fn from_orthant_coords(o: OrthantId, c: [T; 2]) -> Self {
        let eps = T::snap();
        let snap = |x: T| if x <= eps { T::zero() } else { x };
        Self::canonical(o.space(), o, [snap(c[0]), snap(c[1])])
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn orthant(&self) -> Option<OrthantId> {
        self.orthant
    }

    /// Coordinates (one value for T3); empty for the origin.
    pub fn coords(&self) -> &[T] {
        if self.orthant.is_none() {
            &[]
        } else {
            &self.coords[..self.space.dim()]
        }
    }

    pub fn raw_coords(&self) -> [T; 2] {
        self.coords
    }

    pub fn is_origin(&self) -> bool {
        self.orthant.is_none()
    }

    /// Distance to the origin.
    pub fn norm(&self) -> T {
        let [a, b] = self.coords;
        if b.is_zero() {
            a.abs()
        } else if a.is_zero() {
            b.abs()
        } else {
            (a * a + b * b).sqrt()
        }
    }

    /// `(axis, t)` when the point lies on a single T4 axis.
    pub fn axis(&self) -> Option<(u8, T)> {
        match self.orthant? {
            OrthantId::Ray(_) => None,
            OrthantId::Quad(i, j) => {
                if self.coords[1].is_zero() {
                    Some((i, self.coords[0]))
                } else if self.coords[0].is_zero() {
                    Some((j, self.coords[1]))
                } else {
                    None
                }
            }
        }
    }

    /// Coordinate along T4 `axis` (zero if the point has no component on it).
    pub fn axis_value(&self, axis: u8) -> T {
        match self.orthant {
            Some(OrthantId::Quad(i, j)) => {
                if i == axis {
                    self.coords[0]
                } else if j == axis {
                    self.coords[1]
                } else {
                    T::zero()
                }
            }
            _ => T::zero(),
        }
    }

    /// Whether the point lies in the closed orthant `o`.
    pub fn in_closed(&self, o: OrthantId) -> bool {
        match (self.orthant, o) {
            (None, _) => true,
            (Some(p), o) if p == o => true,
            (Some(OrthantId::Quad(..)), OrthantId::Quad(i, j)) => match self.axis() {
                Some((a, _)) => a == i || a == j,
                None => false,
            },
            _ => false,
        }
    }

    /// Coordinates in closed orthant `o`, if the point lies in it.
    pub fn coords_in(&self, o: OrthantId) -> Option<[T; 2]> {
        if !self.in_closed(o) {
            return None;
        }
        Some(match o {
            OrthantId::Ray(_) => self.coords,
            OrthantId::Quad(i, j) => [self.axis_value(i), self.axis_value(j)],
        })
    }

    /// Dense indices of all closed orthants containing the point.
    pub fn containing_orthants(&self) -> Vec<usize> {
        match self.orthant {
            None => (0..self.space.n_orthants()).collect(),
            Some(o) => match self.axis() {
                Some((a, _)) => petersen::axis_orthants(a).to_vec(),
                None => vec![o.index()],
            },
        }
    }

    /// Closed quadrants containing a non-origin T4 point.
    #[inline]
    fn quad_candidates(&self) -> ([usize; 3], usize) {
        match self.axis() {
            Some((a, _)) => (petersen::axis_orthants(a), 3),
            None => ([self.orthant.map_or(0, |o| o.index()), 0, 0], 1),
        }
    }

    /// Geometric equality with absolute tolerance `tol` per coordinate.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        if self.space != other.space {
            return false;
        }
        if self.orthant == other.orthant {
            return (self.coords[0] - other.coords[0]).abs() <= tol
                && (self.coords[1] - other.coords[1]).abs() <= tol;
        }
        distance_unchecked(self, other) <= tol
    }

    pub fn cast<U: Scalar>(&self) -> TreePoint<U> {
        TreePoint {
            space: self.space,
            orthant: self.orthant,
            coords: [U::lit(self.coords[0].as_f64()), U::lit(self.coords[1].as_f64())],
        }
    }
}

impl<T: Scalar> PartialEq for TreePoint<T> {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.orthant == other.orthant && self.coords == other.coords
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OrthantJson {
    Ray(u8),
    Quad([u8; 2]),
}

impl From<OrthantId> for OrthantJson {
    fn from(o: OrthantId) -> Self {
        match o {
            OrthantId::Ray(k) => OrthantJson::Ray(k),
            OrthantId::Quad(i, j) => OrthantJson::Quad([i, j]),
        }
    }
}

impl TryFrom<OrthantJson> for OrthantId {
    type Error = Error;

    fn try_from(j: OrthantJson) -> Result<Self> {
        match j {
            OrthantJson::Ray(k) => OrthantId::ray(k),
            OrthantJson::Quad([a, b]) => {
                // coords follow ascending axis order; [b, a] with b > a is rejected
                if a >= b {
                    return Err(Error::InvalidOrthant(format!("[{a},{b}] must be ascending")));
                }
                OrthantId::quad(a, b)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PointJson<T> {
    space: Space,
    orthant: Option<OrthantJson>,
    coords: Vec<T>,
}

impl<T: Scalar> From<TreePoint<T>> for PointJson<T> {
    fn from(p: TreePoint<T>) -> Self {
        PointJson {
            space: p.space,
            orthant: p.orthant.map(OrthantJson::from),
            coords: p.coords().to_vec(),
        }
    }
}

impl<T: Scalar> TryFrom<PointJson<T>> for TreePoint<T> {
    type Error = Error;

    fn try_from(j: PointJson<T>) -> Result<Self> {
        let o = j.orthant.map(OrthantId::try_from).transpose()?;
        TreePoint::new(j.space, o, &j.coords)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GeodesicKind {
    SameOrthant,
    /// Straight segment through the listed orthant sequence (dense indices).
    Unfolded(Vec<OrthantId>),
    ConePath,
}

/// Shortest path between two points.
#[derive(Clone, Debug)]
pub struct Geodesic<T: Scalar> {
    pub endpoints: [TreePoint<T>; 2],
    pub length: T,
    pub kind: GeodesicKind,
    /// Boundary points crossed, in order from the first endpoint.
    pub breakpoints: Vec<TreePoint<T>>,
    /// Arc-length fractions of the breakpoints.
    pub fractions: Vec<T>,
}

impl<T: Scalar> Geodesic<T> {
    /// Polyline nodes: endpoints with breakpoints in between.
    pub fn nodes(&self) -> (Vec<TreePoint<T>>, Vec<T>) {
        let mut pts = Vec::with_capacity(self.breakpoints.len() + 2);
        let mut fr = Vec::with_capacity(self.breakpoints.len() + 2);
        pts.push(self.endpoints[0]);
        fr.push(T::zero());
        pts.extend_from_slice(&self.breakpoints);
        fr.extend_from_slice(&self.fractions);
        pts.push(self.endpoints[1]);
        fr.push(T::one());
        (pts, fr)
    }
}

fn check_space<T: Scalar>(p: &TreePoint<T>, q: &TreePoint<T>) -> Result<()> {
    if p.space != q.space {
        Err(Error::SpaceMismatch)
    } else {
        Ok(())
    }
}

pub fn distance<T: Scalar>(p: &TreePoint<T>, q: &TreePoint<T>) -> Result<T> {
    check_space(p, q)?;
    Ok(distance_unchecked(p, q))
}

/// Distance without the space check.
pub fn distance_unchecked<T: Scalar>(p: &TreePoint<T>, q: &TreePoint<T>) -> T {
    match p.space {
        Space::T3 => {
            if p.orthant == q.orthant || p.is_origin() || q.is_origin() {
                (p.coords[0] - q.coords[0]).abs()
            } else {
                p.coords[0] + q.coords[0]
            }
        }
        Space::T4 => {
            if p.is_origin() {
                return q.norm();
            }
            if q.is_origin() {
                return p.norm();
            }
            let cone = p.norm() + q.norm();
            best_chain(p, q).map_or(cone, |b| b.0.min(cone))
        }
    }
}

#[inline]
fn quarter<T: Scalar>(m: usize) -> [T; 2] {
    match m % 4 {
        0 => [T::one(), T::zero()],
        1 => [T::zero(), T::one()],
        2 => [-T::one(), T::zero()],
        _ => [T::zero(), -T::one()],
    }
}

/// Endpoints of `p → q` unfolded along `ch` into the plane, axis `v_m` at
/// angle m·90°.
#[inline]
fn unfold<T: Scalar>(ch: &Chain, p: &TreePoint<T>, q: &TreePoint<T>) -> ([T; 2], [T; 2]) {
    let v = ch.vertices();
    let k = v.len() - 2;
    let pa = [p.axis_value(v[0]), p.axis_value(v[1])];
    let e0 = quarter::<T>(k);
    let e1 = quarter::<T>(k + 1);
    let (qa, qb) = (q.axis_value(v[k]), q.axis_value(v[k + 1]));
    let qq = [qa * e0[0] + qb * e1[0], qa * e0[1] + qb * e1[1]];
    (pa, qq)
}

/// Crossing parameters of the inner axes; `None` if the straight segment
/// leaves the unfolded wedge or touches the origin.
fn crossings<T: Scalar>(ch: &Chain, pp: [T; 2], qq: [T; 2]) -> Option<([T; 4], [T; 4])> {
    let k = ch.vertices().len() - 2;
    let tol = T::snap();
    let d = [qq[0] - pp[0], qq[1] - pp[1]];
    let mut ts = [T::zero(); 4];
    let mut rs = [T::zero(); 4];
    let mut last = -tol;
    for m in 1..=k {
        let u = quarter::<T>(m);
        let den = u[0] * d[1] - u[1] * d[0];
        let num = -(u[0] * pp[1] - u[1] * pp[0]);
        if den.abs() <= T::epsilon() {
            return None;
        }
        let t = num / den;
        if t < -tol || t > T::one() + tol || t < last {
            return None;
        }
        let r = u[0] * (pp[0] + t * d[0]) + u[1] * (pp[1] + t * d[1]);
        if r <= tol {
            return None;
        }
        ts[m - 1] = t.max(T::zero()).min(T::one());
        rs[m - 1] = r;
        last = t;
    }
    Some((ts, rs))
}

pub fn geodesic<T: Scalar>(p: &TreePoint<T>, q: &TreePoint<T>) -> Result<Geodesic<T>> {
    check_space(p, q)?;
    Ok(geodesic_unchecked(p, q))
}

pub fn geodesic_unchecked<T: Scalar>(p: &TreePoint<T>, q: &TreePoint<T>) -> Geodesic<T> {
    let endpoints = [*p, *q];
    let np = p.norm();
    let nq = q.norm();
    let cone = |len: T| {
        let lam = np / (np + nq);
        Geodesic {
            endpoints,
            length: len,
            kind: GeodesicKind::ConePath,
            breakpoints: vec![TreePoint::origin(p.space)],
            fractions: vec![lam],
        }
    };
    let straight = |len: T| Geodesic {
        endpoints,
        length: len,
        kind: GeodesicKind::SameOrthant,
        breakpoints: Vec::new(),
        fractions: Vec::new(),
    };
    if p.is_origin() || q.is_origin() {
        return straight(np + nq);
    }
    match p.space {
        Space::T3 => {
            if p.orthant == q.orthant {
                straight((np - nq).abs())
            } else {
                cone(np + nq)
            }
        }
        Space::T4 => match best_chain(p, q) {
            Some((len, ch, ts, rs)) if len < np + nq => {
                let v = ch.vertices();
                let k = v.len() - 2;
                if k == 0 {
                    return straight(len);
                }
                let tol = T::snap();
                let mut breakpoints = Vec::with_capacity(k);
                let mut fractions = Vec::with_capacity(k);
                for m in 1..=k {
                    let t = ts[m - 1];
                    // crossings at an endpoint are the endpoint itself
                    if t <= tol || t >= T::one() - tol {
                        continue;
                    }
                    breakpoints.push(TreePoint::on_axis(v[m], rs[m - 1]).expect("valid axis"));
                    fractions.push(t);
                }
                let seq = ch
                    .orthant_seq()
                    .into_iter()
                    .map(|i| OrthantId::from_index(Space::T4, i))
                    .collect();
                Geodesic {
                    endpoints,
                    length: len,
                    kind: GeodesicKind::Unfolded(seq),
                    breakpoints,
                    fractions,
                }
            }
            _ => cone(np + nq),
        },
    }
}

type ChainHit<T> = (T, &'static Chain, [T; 4], [T; 4]);

/// Shortest valid unfolding between two non-origin T4 points.
///
/// Chains of four quadrants span 360° once unfolded, so a straight segment
/// through them always hits the origin; only chains of up to three are tried.
fn best_chain<T: Scalar>(p: &TreePoint<T>, q: &TreePoint<T>) -> Option<ChainHit<T>> {
    let mut best: Option<(T, &'static Chain, [T; 4], [T; 4])> = None;
    let (ca, na) = p.quad_candidates();
    let (cb, nb) = q.quad_candidates();
    for &a in &ca[..na] {
        for &b in &cb[..nb] {
            for ch in petersen::short_chains(a, b) {
                let (pp, qq) = unfold(ch, p, q);
                if let Some((ts, rs)) = crossings(ch, pp, qq) {
                    let (dx, dy) = (qq[0] - pp[0], qq[1] - pp[1]);
                    let len2 = dx * dx + dy * dy;
                    let better = match &best {
                        None => true,
                        Some(b) => len2 < b.0 || (len2 == b.0 && ch.len < b.1.len),
                    };
                    if better {
                        best = Some((len2, ch, ts, rs));
                    }
                }
            }
        }
    }
    best.map(|(l2, ch, ts, rs)| (l2.sqrt(), ch, ts, rs))
}

/// How a geodesic meets the orthant boundaries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Passage<T> {
    /// Stays in one closed orthant.
    Inside,
    /// Crosses axes; crossings were appended as (axis, radius, fraction).
    Axes,
    /// Cone path through the origin at this fraction.
    Origin(T),
}

/// Boundary crossings of the T4 geodesic `p → q` without allocating a
/// [`Geodesic`].
pub(crate) fn passage<T: Scalar>(p: &TreePoint<T>, q: &TreePoint<T>, out: &mut Vec<(u8, T, T)>) -> Passage<T> {
    if p.is_origin() || q.is_origin() {
        return Passage::Inside;
    }
    let (ca, na) = p.quad_candidates();
    let (cb, nb) = q.quad_candidates();
    if ca[..na].iter().any(|a| cb[..nb].contains(a)) {
        return Passage::Inside;
    }
    let (np, nq) = (p.norm(), q.norm());
    if na == 1 && nb == 1 && petersen::orthant_distance(ca[0], cb[0]) == 3 {
        return Passage::Origin(np / (np + nq));
    }
    match best_chain(p, q) {
        Some((len, ch, ts, rs)) if len < np + nq => push_crossings(ch, &ts, &rs, out),
        _ => Passage::Origin(np / (np + nq)),
    }
}

/// `passage` restricted to a precomputed list of candidate unfoldings
/// (all short chains between the closed quadrants of `p` and `q`).
pub(crate) fn passage_among<T: Scalar>(
    chains: &[&'static Chain],
    p: &TreePoint<T>,
    q: &TreePoint<T>,
    np: T,
    nq: T,
    out: &mut Vec<(u8, T, T)>,
) -> Passage<T> {
    let mut best: Option<ChainHit<T>> = None;
    for &ch in chains {
        let (pp, qq) = unfold(ch, p, q);
        if let Some((ts, rs)) = crossings(ch, pp, qq) {
            if chains.len() == 1 {
                return push_crossings(ch, &ts, &rs, out);
            }
            let (dx, dy) = (qq[0] - pp[0], qq[1] - pp[1]);
            let len2 = dx * dx + dy * dy;
            if best.as_ref().map_or(true, |b| len2 < b.0 || (len2 == b.0 && ch.len < b.1.len)) {
                best = Some((len2, ch, ts, rs));
            }
        }
    }
    match best {
        Some((_, ch, ts, rs)) => push_crossings(ch, &ts, &rs, out),
        None => Passage::Origin(np / (np + nq)),
    }
}

fn push_crossings<T: Scalar>(ch: &Chain, ts: &[T; 4], rs: &[T; 4], out: &mut Vec<(u8, T, T)>) -> Passage<T> {
    let v = ch.vertices();
    let k = v.len() - 2;
    if k == 0 {
        return Passage::Inside;
    }
    let tol = T::snap();
    let before = out.len();
    for m in 1..=k {
        let t = ts[m - 1];
        if t > tol && t < T::one() - tol {
            out.push((v[m], rs[m - 1], t));
        }
    }
    if out.len() == before {
        Passage::Inside
    } else {
        Passage::Axes
    }
}

fn common_orthant<T: Scalar>(a: &TreePoint<T>, b: &TreePoint<T>) -> Option<OrthantId> {
    let sp = a.space;
    if a.is_origin() {
        return Some(b.orthant.unwrap_or(OrthantId::from_index(sp, 0)));
    }
    if b.is_origin() {
        return a.orthant;
    }
    let ob = b.containing_orthants();
    a.containing_orthants()
        .into_iter()
        .find(|o| ob.contains(o))
        .map(|i| OrthantId::from_index(sp, i))
}

/// Linear interpolation between two points sharing a closed orthant.
pub(crate) fn lerp_in_orthant<T: Scalar>(a: &TreePoint<T>, b: &TreePoint<T>, s: T) -> TreePoint<T> {
    let o = common_orthant(a, b).expect("consecutive geodesic nodes share an orthant");
    let ca = a.coords_in(o).unwrap();
    let cb = b.coords_in(o).unwrap();
    let c = [
        ca[0] + s * (cb[0] - ca[0]),
        ca[1] + s * (cb[1] - ca[1]),
    ];
    TreePoint::from_orthant_coords(o, c)
}

/// Point at arc-length fraction `lambda` of the geodesic from `p` to `q`.
pub fn point_on_geodesic<T: Scalar>(p: &TreePoint<T>, q: &TreePoint<T>, lambda: T) -> Result<TreePoint<T>> {
    check_space(p, q)?;
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::OutOfRange(format!("lambda = {lambda}")));
    }
    Ok(geodesic_unchecked(p, q).point_at(lambda))
}

impl<T: Scalar> Geodesic<T> {
    /// Point at arc-length fraction `lambda` in [0, 1].
    pub fn point_at(&self, lambda: T) -> TreePoint<T> {
        if lambda <= T::zero() {
            return self.endpoints[0];
        }
        if lambda >= T::one() {
            return self.endpoints[1];
        }
        let (pts, fr) = self.nodes();
        for w in 0..pts.len() - 1 {
            let (f0, f1) = (fr[w], fr[w + 1]);
            if lambda <= f1 || w == pts.len() - 2 {
                let s = if f1 > f0 { (lambda - f0) / (f1 - f0) } else { T::zero() };
                return lerp_in_orthant(&pts[w], &pts[w + 1], s);
            }
        }
        self.endpoints[1]
    }
}

/// Fraction λ₀ at which the geodesic passes through the origin, for cone paths.
pub fn origin_crossing_fraction<T: Scalar>(p: &TreePoint<T>, q: &TreePoint<T>) -> Option<T> {
    if p.space != q.space {
        return None;
    }
    let g = geodesic_unchecked(p, q);
    match g.kind {
        GeodesicKind::ConePath => Some(g.fractions[0]),
        _ => None,
    }
}
