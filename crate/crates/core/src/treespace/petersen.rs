//! Orthant complex of T4: orthants are the 15 edges of the Petersen graph,
//! axes are its 10 vertices.

use std::sync::OnceLock;

/// Outer cycle 0-1-2-3-4, spokes i–i+5, inner pentagram 5-7-9-6-8-5. Sorted.
pub const EDGES: [(u8, u8); 15] = [
    (0, 1),
    (0, 4),
    (0, 5),
    (1, 2),
    (1, 6),
    (2, 3),
    (2, 7),
    (3, 4),
    (3, 8),
    (4, 9),
    (5, 7),
    (5, 8),
    (6, 8),
    (6, 9),
    (7, 9),
];

pub const N_AXES: usize = 10;
pub const N_ORTHANTS: usize = 15;

/// Index of the orthant {i, j} in `EDGES`, if it is one.
pub fn edge_index(i: u8, j: u8) -> Option<usize> {
    const T: [[u8; N_AXES]; N_AXES] = edge_table();
    match T.get(i as usize).and_then(|r| r.get(j as usize)) {
        Some(&k) if k != u8::MAX => Some(k as usize),
        _ => None,
    }
}

const fn edge_table() -> [[u8; N_AXES]; N_AXES] {
    let mut t = [[u8::MAX; N_AXES]; N_AXES];
    let mut k = 0;
    while k < EDGES.len() {
        let (a, b) = EDGES[k];
        t[a as usize][b as usize] = k as u8;
        t[b as usize][a as usize] = k as u8;
        k += 1;
    }
    t
}

pub fn adjacent(i: u8, j: u8) -> bool {
    edge_index(i, j).is_some()
}

/// The three orthants incident to `axis`, ascending.
pub fn axis_orthants(axis: u8) -> [usize; 3] {
    const T: [[usize; 3]; N_AXES] = axis_table();
    T[axis as usize]
}

const fn axis_table() -> [[usize; 3]; N_AXES] {
    let mut t = [[0usize; 3]; N_AXES];
    let mut axis = 0;
    while axis < N_AXES {
        let mut k = 0;
        let mut idx = 0;
        while idx < EDGES.len() {
            let (a, b) = EDGES[idx];
            if a as usize == axis || b as usize == axis {
                t[axis][k] = idx;
                k += 1;
            }
            idx += 1;
        }
        axis += 1;
    }
    t
}

pub fn neighbors(v: u8) -> [u8; 3] {
    let mut out = [0u8; 3];
    let mut k = 0;
    for &(a, b) in EDGES.iter() {
        if a == v {
            out[k] = b;
            k += 1;
        } else if b == v {
            out[k] = a;
            k += 1;
        }
    }
    out
}

/// A simple vertex path v0-s1-…-v_{k+1}; consecutive vertex pairs are the
/// orthants traversed, the inner vertices are the axes crossed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Chain {
    pub verts: [u8; 5],
    pub len: u8,
}

impl Chain {
    pub fn vertices(&self) -> &[u8] {
        &self.verts[..self.len as usize]
    }

    /// Number of orthants traversed.
    pub fn orthants(&self) -> usize {
        self.len as usize - 1
    }

    pub fn orthant_seq(&self) -> Vec<usize> {
        self.vertices()
            .windows(2)
            .map(|w| edge_index(w[0], w[1]).expect("chain edge"))
            .collect()
    }
}

/// Chains of at most 4 orthants from orthant `a` to orthant `b`.
pub fn chains(a: usize, b: usize) -> &'static [Chain] {
    static TABLE: OnceLock<Vec<Vec<Chain>>> = OnceLock::new();
    let t = TABLE.get_or_init(build_chains);
    &t[a * N_ORTHANTS + b]
}

/// Chains of at most 3 orthants from `a` to `b`, the only ones a straight
/// unfolded segment can pass through without touching the origin.
pub fn short_chains(a: usize, b: usize) -> &'static [Chain] {
    static TABLE: OnceLock<Vec<Vec<Chain>>> = OnceLock::new();
    let t = TABLE.get_or_init(|| {
        (0..N_ORTHANTS * N_ORTHANTS)
            .map(|k| {
                chains(k / N_ORTHANTS, k % N_ORTHANTS)
                    .iter()
                    .filter(|c| c.orthants() <= 3)
                    .copied()
                    .collect()
            })
            .collect()
    });
    &t[a * N_ORTHANTS + b]
}

fn build_chains() -> Vec<Vec<Chain>> {
    let mut table = vec![Vec::new(); N_ORTHANTS * N_ORTHANTS];
    for (a, &(x, y)) in EDGES.iter().enumerate() {
        table[a * N_ORTHANTS + a].push(Chain {
            verts: [x, y, 0, 0, 0],
            len: 2,
        });
        for (v0, s1) in [(x, y), (y, x)] {
            let mut path = vec![v0, s1];
            extend(&mut path, &mut table, a);
        }
    }
    table
}

fn extend(path: &mut Vec<u8>, table: &mut [Vec<Chain>], start: usize) {
    if path.len() == 5 {
        return;
    }
    let last = *path.last().unwrap();
    for n in neighbors(last) {
        if path.contains(&n) {
            continue;
        }
        path.push(n);
        let b = edge_index(last, n).unwrap();
        let mut verts = [0u8; 5];
        verts[..path.len()].copy_from_slice(path);
        table[start * N_ORTHANTS + b].push(Chain {
            verts,
            len: path.len() as u8,
        });
        extend(path, table, start);
        path.pop();
    }
}

/// Length of the shortest orthant chain between two orthants (0 = same,
/// 1 = share an axis, …). Orthants at distance 3 only meet at the origin.
pub fn orthant_distance(a: usize, b: usize) -> usize {
    static D: OnceLock<Vec<u8>> = OnceLock::new();
    let d = D.get_or_init(|| {
        (0..N_ORTHANTS * N_ORTHANTS)
            .map(|k| {
                chains(k / N_ORTHANTS, k % N_ORTHANTS)
                    .iter()
                    .map(|c| c.orthants() as u8 - 1)
                    .min()
                    .unwrap_or(3)
            })
            .collect()
    });
    d[a * N_ORTHANTS + b] as usize
}

/// Ordered triples of sequentially adjacent orthants (O_a, O_m, O_c), given
/// as the vertex path v0-s1-s2-v3 unfolding them into three quadrants.
pub fn triples() -> &'static [Chain] {
    static T: OnceLock<Vec<Chain>> = OnceLock::new();
    T.get_or_init(|| {
        let mut out: Vec<Chain> = Vec::new();
        for a in 0..N_ORTHANTS {
            for b in 0..N_ORTHANTS {
                for c in chains(a, b) {
                    if c.orthants() == 3 {
                        // keep one orientation of each path
                        let v = c.vertices();
                        if v[0] < v[3] {
                            out.push(*c);
                        }
                    }
                }
            }
        }
        out
    })
}
