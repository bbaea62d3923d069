//! Grid inverse-transform sampling: orthant by mass, then row, then cell,
//! then uniform within the cell.

use rand::Rng;

use crate::{OrthantId, Space, TreePoint};

pub(crate) struct Sampler {
    space: Space,
    spacing: f64,
    /// Cells per axis.
    m: usize,
    /// Cumulative orthant masses.
    orthant_cum: Vec<f64>,
    /// Cumulative row masses within each orthant (one row in T3).
    row_cum: Vec<f64>,
    /// Cell masses; f32 keeps the 9.6M-cell T4 table small.
    cells: Vec<f32>,
}

impl Sampler {
    pub fn build(f: impl Fn(&TreePoint) -> f64, space: Space, spacing: f64, radius: f64) -> Self {
        let m = (radius / spacing).ceil() as usize;
        let rows = if space == Space::T3 { 1 } else { m };
        let centre = |i: usize| (i as f64 + 0.5) * spacing;
        let n_orth = space.n_orthants();
        let mut orthant_cum = Vec::with_capacity(n_orth);
        let mut row_cum = Vec::with_capacity(n_orth * rows);
        let mut cells = Vec::with_capacity(n_orth * rows * m);
        let mut total = 0.0;
        for o in space.orthants() {
            let mut acc = 0.0;
            for r in 0..rows {
                let mut row = 0.0;
                for c in 0..m {
                    let p = match space {
                        Space::T3 => TreePoint::from_orthant_coords(o, [centre(c), 0.0]),
                        Space::T4 => TreePoint::from_orthant_coords(o, [centre(r), centre(c)]),
                    };
                    let v = f(&p).max(0.0);
                    row += v;
                    cells.push(v as f32);
                }
                acc += row;
                row_cum.push(acc);
            }
            total += acc;
            orthant_cum.push(total);
        }
        Sampler { space, spacing, m, orthant_cum, row_cum, cells }
    }

    fn rows(&self) -> usize {
        if self.space == Space::T3 {
            1
        } else {
            self.m
        }
    }

    pub fn draw<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<TreePoint> {
        let rows = self.rows();
        let total = *self.orthant_cum.last().unwrap();
        (0..n)
            .map(|_| {
                let t = rng.gen::<f64>() * total;
                let o = self.orthant_cum.partition_point(|&c| c <= t).min(self.orthant_cum.len() - 1);
                let rc = &self.row_cum[o * rows..(o + 1) * rows];
                let t = rng.gen::<f64>() * rc[rows - 1];
                let r = rc.partition_point(|&c| c <= t).min(rows - 1);
                let row_start = if r == 0 { 0.0 } else { rc[r - 1] };
                let cells = &self.cells[(o * rows + r) * self.m..(o * rows + r + 1) * self.m];
                let mut t = rng.gen::<f64>() * (rc[r] - row_start);
                let mut c = cells.iter().rposition(|&v| v > 0.0).unwrap_or(0);
                for (k, &v) in cells.iter().enumerate() {
                    if v > 0.0 && t < v as f64 {
                        c = k;
                        break;
                    }
                    t -= v as f64;
                }
                let oid = OrthantId::from_index(self.space, o);
                let u = (c as f64 + rng.gen::<f64>()) * self.spacing;
                match self.space {
                    Space::T3 => TreePoint::from_orthant_coords(oid, [u, 0.0]),
                    Space::T4 => {
                        let w = (r as f64 + rng.gen::<f64>()) * self.spacing;
                        TreePoint::from_orthant_coords(oid, [w, u])
                    }
                }
            })
            .collect()
    }
}
