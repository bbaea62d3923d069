//! Upper envelope of points (u, v, y): the faces of their 3D convex hull
//! whose outward normal points up in y.

use crate::hull::planar::{convex_hull, upper_hull};
use crate::Scalar;

#[derive(Clone, Debug, Default)]
pub(crate) struct Envelope {
    /// Upper faces, counter-clockwise in (u, v).
    pub faces: Vec<[usize; 3]>,
    /// Points on the envelope (face vertices, or the upper chain when the
    /// projection is degenerate).
    pub vertices: Vec<usize>,
    /// Projected convex hull, counter-clockwise.
    pub polygon: Vec<usize>,
}

#[inline]
fn sub<T: Scalar>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross3<T: Scalar>(a: [T; 3], b: [T; 3]) -> [T; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
fn dot<T: Scalar>(a: [T; 3], b: [T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm<T: Scalar>(a: [T; 3]) -> T {
    dot(a, a).sqrt()
}

struct Face<T> {
    v: [usize; 3],
    n: [T; 3],
    off: T,
    alive: bool,
}

pub(crate) fn upper_envelope<T: Scalar>(pts: &[[T; 3]]) -> Envelope {
    let proj: Vec<[T; 2]> = pts.iter().map(|p| [p[0], p[1]]).collect();
    let polygon = convex_hull(&proj);
    if pts.is_empty() {
        return Envelope::default();
    }
    let scale = pts
        .iter()
        .flat_map(|p| p.iter())
        .fold(T::one(), |s, v| s.max(v.abs()));
    let eps = T::lit(1e-10).max(T::epsilon() * T::lit(1024.0)) * scale;

    if polygon.len() < 3 {
        return degenerate_line(pts, polygon);
    }
    // initial tetrahedron
    let p0 = 0;
    let p1 = (0..pts.len())
        .max_by(|&a, &b| norm(sub(pts[a], pts[p0])).partial_cmp(&norm(sub(pts[b], pts[p0]))).unwrap())
        .unwrap();
    let d01 = sub(pts[p1], pts[p0]);
    let p2 = (0..pts.len())
        .max_by(|&a, &b| {
            norm(cross3(d01, sub(pts[a], pts[p0])))
                .partial_cmp(&norm(cross3(d01, sub(pts[b], pts[p0]))))
                .unwrap()
        })
        .unwrap();
    let nrm = cross3(d01, sub(pts[p2], pts[p0]));
    let nn = norm(nrm);
    if nn <= eps * scale {
        return degenerate_line(pts, polygon);
    }
    let unit = [nrm[0] / nn, nrm[1] / nn, nrm[2] / nn];
    let p3 = (0..pts.len())
        .max_by(|&a, &b| {
            dot(unit, sub(pts[a], pts[p0]))
                .abs()
                .partial_cmp(&dot(unit, sub(pts[b], pts[p0])).abs())
                .unwrap()
        })
        .unwrap();
    if dot(unit, sub(pts[p3], pts[p0])).abs() <= eps {
        return coplanar(pts, polygon, unit);
    }

    let mut faces: Vec<Face<T>> = Vec::new();
    let centroid = {
        let q = [pts[p0], pts[p1], pts[p2], pts[p3]];
        let f = T::lit(0.25);
        [
            (q[0][0] + q[1][0] + q[2][0] + q[3][0]) * f,
            (q[0][1] + q[1][1] + q[2][1] + q[3][1]) * f,
            (q[0][2] + q[1][2] + q[2][2] + q[3][2]) * f,
        ]
    };
    let make = |a: usize, b: usize, c: usize| -> Face<T> {
        let mut n = cross3(sub(pts[b], pts[a]), sub(pts[c], pts[a]));
        let l = norm(n);
        n = [n[0] / l, n[1] / l, n[2] / l];
        let mut v = [a, b, c];
        let mut off = dot(n, pts[a]);
        if dot(n, centroid) - off > T::zero() {
            n = [-n[0], -n[1], -n[2]];
            off = -off;
            v = [a, c, b];
        }
        Face { v, n, off, alive: true }
    };
    for f in [[p0, p1, p2], [p0, p1, p3], [p0, p2, p3], [p1, p2, p3]] {
        faces.push(make(f[0], f[1], f[2]));
    }
    let init = [p0, p1, p2, p3];
    let mut dead = 0usize;
    for i in 0..pts.len() {
        if init.contains(&i) {
            continue;
        }
        let visible: Vec<usize> = (0..faces.len())
            .filter(|&f| faces[f].alive && dot(faces[f].n, pts[i]) - faces[f].off > eps)
            .collect();
        if visible.is_empty() {
            continue;
        }
        dead += visible.len();
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * visible.len());
        for &f in &visible {
            let v = faces[f].v;
            for k in 0..3 {
                edges.push((v[k], v[(k + 1) % 3]));
            }
            faces[f].alive = false;
        }
        edges.sort_unstable();
        let horizon: Vec<(usize, usize)> = edges
            .iter()
            .filter(|&&(a, b)| edges.binary_search(&(b, a)).is_err())
            .copied()
            .collect();
        for (a, b) in horizon {
            let mut n = cross3(sub(pts[b], pts[a]), sub(pts[i], pts[a]));
            let l = norm(n);
            if l <= T::zero() {
                continue;
            }
            n = [n[0] / l, n[1] / l, n[2] / l];
            faces.push(Face {
                v: [a, b, i],
                n,
                off: dot(n, pts[a]),
                alive: true,
            });
        }
        if 2 * dead > faces.len() {
            faces.retain(|f| f.alive);
            dead = 0;
        }
    }
    let up = T::lit(1e-9);
    let mut out = Vec::new();
    let mut verts = Vec::new();
    for f in faces.iter().filter(|f| f.alive && f.n[2] > up) {
        let [a, b, c] = f.v;
        // outward normal with positive y component is counter-clockwise in (u, v)
        out.push([a, b, c]);
        verts.extend_from_slice(&f.v);
    }
    verts.sort_unstable();
    verts.dedup();
    Envelope {
        faces: out,
        vertices: verts,
        polygon,
    }
}

/// All points in one non-vertical plane: fan-triangulate the projected hull.
fn coplanar<T: Scalar>(pts: &[[T; 3]], polygon: Vec<usize>, unit: [T; 3]) -> Envelope {
    if unit[2].abs() <= T::lit(1e-12) {
        return degenerate_line(pts, polygon);
    }
    let faces = (1..polygon.len() - 1)
        .map(|k| [polygon[0], polygon[k], polygon[k + 1]])
        .collect();
    let mut vertices = polygon.clone();
    vertices.sort_unstable();
    Envelope {
        faces,
        vertices,
        polygon,
    }
}

/// Projection is a segment or a point: keep the upper chain along it.
fn degenerate_line<T: Scalar>(pts: &[[T; 3]], polygon: Vec<usize>) -> Envelope {
    let (a, b) = match polygon.len() {
        0 => return Envelope::default(),
        1 => (polygon[0], polygon[0]),
        _ => (polygon[0], polygon[polygon.len() - 1]),
    };
    let d = [pts[b][0] - pts[a][0], pts[b][1] - pts[a][1]];
    let line: Vec<[T; 2]> = pts
        .iter()
        .map(|p| [(p[0] - pts[a][0]) * d[0] + (p[1] - pts[a][1]) * d[1], p[2]])
        .collect();
    let mut vertices = upper_hull(&line);
    vertices.sort_unstable();
    Envelope {
        faces: Vec::new(),
        vertices,
        polygon,
    }
}
