//! Planar convex hull helpers.

use crate::Scalar;

#[inline]
pub fn cross<T: Scalar>(o: [T; 2], a: [T; 2], b: [T; 2]) -> T {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Indices of the upper chain of `pts` (x, y), left to right. Among points
/// sharing an x only the highest can appear; collinear points are dropped.
pub fn upper_hull<T: Scalar>(pts: &[[T; 2]]) -> Vec<usize> {
    let mut order: Vec<(T, T, usize)> = pts.iter().enumerate().map(|(i, p)| (p[0], p[1], i)).collect();
    order.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.partial_cmp(&a.1).unwrap()));
    let mut h: Vec<usize> = Vec::with_capacity(16);
    let mut last_x: Option<T> = None;
    for &(_, _, i) in &order {
        if last_x == Some(pts[i][0]) {
            continue;
        }
        last_x = Some(pts[i][0]);
        while h.len() >= 2 && cross(pts[h[h.len() - 2]], pts[h[h.len() - 1]], pts[i]) >= T::zero() {
            h.pop();
        }
        h.push(i);
    }
    h
}

/// Counter-clockwise convex hull indices (no collinear points).
pub fn convex_hull<T: Scalar>(pts: &[[T; 2]]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&i, &j| {
        pts[i][0]
            .partial_cmp(&pts[j][0])
            .unwrap()
            .then(pts[i][1].partial_cmp(&pts[j][1]).unwrap())
    });
    idx.dedup_by(|a, b| pts[*a] == pts[*b]);
    if idx.len() < 3 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &i in &idx {
        while lower.len() >= 2 && cross(pts[lower[lower.len() - 2]], pts[lower[lower.len() - 1]], pts[i]) <= T::zero() {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in idx.iter().rev() {
        while upper.len() >= 2 && cross(pts[upper[upper.len() - 2]], pts[upper[upper.len() - 1]], pts[i]) <= T::zero() {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Area of a simple polygon given counter-clockwise.
pub fn polygon_area<T: Scalar>(poly: &[[T; 2]]) -> T {
    let n = poly.len();
    if n < 3 {
        return T::zero();
    }
    let mut s = T::zero();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        s = s + a[0] * b[1] - a[1] * b[0];
    }
    s.abs() / T::lit(2.0)
}

/// Whether `x` lies in the counter-clockwise convex polygon, within `tol`
/// (signed edge distance).
pub fn in_convex_polygon<T: Scalar>(poly: &[[T; 2]], x: [T; 2], tol: T) -> bool {
    let n = poly.len();
    match n {
        0 => false,
        1 => (poly[0][0] - x[0]).hypot(poly[0][1] - x[1]) <= tol,
        2 => seg_dist(poly[0], poly[1], x) <= tol,
        _ => (0..n).all(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            cross(a, b, x) >= -tol * len
        }),
    }
}

pub fn seg_dist<T: Scalar>(a: [T; 2], b: [T; 2], x: [T; 2]) -> T {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > T::zero() {
        (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / l2).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    (a[0] + t * d[0] - x[0]).hypot(a[1] + t * d[1] - x[1])
}
