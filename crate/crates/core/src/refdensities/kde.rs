//! Gaussian-kernel density estimator on tree space. Each kernel is
//! renormalized over the grid so that it integrates to one despite the
//! branching at axes and the origin.

use serde::{Deserialize, Serialize};

use crate::clustering::{frechet_mean, FrechetOptions};
use crate::error::{Error, Result};
use crate::integrate::{Density, GridSpec};
use crate::treespace::petersen::{orthant_distance, short_chains, EDGES};
use crate::treespace::distance_unchecked;
use crate::{OrthantId, Space, TreePoint};

/// Kernels are cut off at this many bandwidths (relative weight e^{-24.5}).
pub const KERNEL_CUTOFF: f64 = 7.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeModel {
    pub space: Space,
    pub samples: Vec<TreePoint>,
    pub bandwidth: f64,
    /// c_i, making kernel i integrate to one on `grid`.
    pub normalizers: Vec<f64>,
    pub grid: GridSpec<f64>,
}

/// h = 1.06 σ̂ n^{-1/(4+dim)}, σ̂ the root mean squared distance to the
/// Fréchet mean.
pub fn default_bandwidth(samples: &[TreePoint]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewPoints(format!("KDE needs 2 samples, got {}", samples.len())));
    }
    let mean = frechet_mean(samples, None, &FrechetOptions::default())?;
    let n = samples.len() as f64;
    let ms = samples.iter().map(|x| distance_unchecked(x, &mean).powi(2)).sum::<f64>() / n;
    let dim = samples[0].space().dim() as f64;
    Ok(1.06 * ms.sqrt() * n.powf(-1.0 / (4.0 + dim)))
}

/// Fits the KDE; `grid` (default grid when None) fixes the kernel
/// normalizers.
pub fn kde_fit(samples: &[TreePoint], bandwidth: Option<f64>, grid: Option<&GridSpec<f64>>) -> Result<KdeModel> {
    if samples.len() < 2 {
        return Err(Error::TooFewPoints(format!("KDE needs 2 samples, got {}", samples.len())));
    }
    let space = samples[0].space();
    if samples.iter().any(|x| x.space() != space) {
        return Err(Error::SpaceMismatch);
    }
    let h = match bandwidth {
        Some(h) => h,
        None => default_bandwidth(samples)?,
    };
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::OutOfRange(format!("bandwidth {h}")));
    }
    let grid = grid.copied().unwrap_or_else(|| GridSpec::default_for(space));
    let cell = grid.cell_measure(space);
    let r = KERNEL_CUTOFF * h;
    let mut normalizers = Vec::with_capacity(samples.len());
    for x in samples {
        let mut s = 0.0;
        stamp(x, &grid, r, |_, d| s += (-d * d / (2.0 * h * h)).exp());
        if !(s > 0.0) {
            return Err(Error::OutOfRange(format!("bandwidth {h} below the grid resolution")));
        }
        normalizers.push(1.0 / (s * cell));
    }
    Ok(KdeModel { space, samples: samples.to_vec(), bandwidth: h, normalizers, grid })
}

pub fn kde_eval(model: &KdeModel, x: &TreePoint) -> Result<f64> {
    if x.space() != model.space {
        return Err(Error::SpaceMismatch);
    }
    Ok(model.density(x))
}

impl Density<f64> for KdeModel {
    fn space(&self) -> Space {
        self.space
    }

    fn density(&self, x: &TreePoint) -> f64 {
        let h = self.bandwidth;
        let r = KERNEL_CUTOFF * h;
        let s: f64 = self
            .samples
            .iter()
            .zip(&self.normalizers)
            .map(|(xi, c)| {
                let d = distance_unchecked(x, xi);
                if d <= r {
                    c * (-d * d / (2.0 * h * h)).exp()
                } else {
                    0.0
                }
            })
            .sum();
        s / self.samples.len() as f64
    }

    fn density_on_grid(&self, grid: &GridSpec<f64>) -> Vec<f64> {
        let h = self.bandwidth;
        let n = self.samples.len() as f64;
        let mut out = vec![0.0; grid.len(self.space)];
        for (x, c) in self.samples.iter().zip(&self.normalizers) {
            let k = c / n;
            stamp(x, grid, KERNEL_CUTOFF * h, |i, d| out[i] += k * (-d * d / (2.0 * h * h)).exp());
        }
        out
    }
}

/// Index range of cells whose centres fall in [lo, hi].
fn cell_range(lo: f64, hi: f64, grid: &GridSpec<f64>) -> std::ops::Range<usize> {
    let m = grid.cells();
    if hi < 0.0 || hi < lo {
        return 0..0;
    }
    let a = ((lo / grid.spacing - 0.5).ceil().max(0.0)) as usize;
    let b = ((hi / grid.spacing - 0.5).floor() + 1.0).clamp(0.0, m as f64) as usize;
    a.min(b)..b
}

type Box2 = [[f64; 2]; 2];

fn join(b: &mut Option<Box2>, c: Box2) {
    if c[0][1] < 0.0 || c[1][1] < 0.0 {
        return;
    }
    *b = Some(match *b {
        None => c,
        Some(o) => [
            [o[0][0].min(c[0][0]), o[0][1].max(c[0][1])],
            [o[1][0].min(c[1][0]), o[1][1].max(c[1][1])],
        ],
    });
}

/// Calls `visit(cell index, distance)` for every grid cell within distance
/// `r` of `x`, in [`GridSpec::for_each`] indexing.
///
/// In T4 the candidate cells of each quadrant come from boxes bounding
/// every unfolded chain of at most three quadrants and the cone path, each
/// of which bounds the geodesic distance from below.
pub(crate) fn stamp(x: &TreePoint, grid: &GridSpec<f64>, r: f64, mut visit: impl FnMut(usize, f64)) {
    let m = grid.cells();
    let nx = x.norm();
    match x.space() {
        Space::T3 => {
            let own = x.orthant();
            for o in 0..3u8 {
                let same = own == Some(OrthantId::Ray(o));
                let range = if x.is_origin() {
                    cell_range(0.0, r, grid)
                } else if same {
                    cell_range(nx - r, nx + r, grid)
                } else {
                    cell_range(0.0, r - nx, grid)
                };
                for i in range {
                    let u = grid.center(i);
                    let d = if same { (u - nx).abs() } else { u + nx };
                    if d <= r {
                        visit(o as usize * m + i, d);
                    }
                }
            }
        }
        Space::T4 => {
            let from = x.containing_orthants();
            let interior = if x.is_origin() || x.axis().is_some() { None } else { Some(from[0]) };
            for (o, &(ei, ej)) in EDGES.iter().enumerate() {
                let oid = OrthantId::Quad(ei, ej);
                let mut bx: Option<Box2> = None;
                if x.is_origin() {
                    join(&mut bx, [[0.0, r], [0.0, r]]);
                } else {
                    join(&mut bx, [[0.0, r - nx], [0.0, r - nx]]);
                    for &p in &from {
                        if p == o {
                            let c = x.coords_in(oid).unwrap();
                            join(&mut bx, [[c[0] - r, c[0] + r], [c[1] - r, c[1] + r]]);
                            continue;
                        }
                        for ch in short_chains(p, o) {
                            let v = ch.vertices();
                            let (x0, x1) = (x.axis_value(v[0]), x.axis_value(v[1]));
                            // ranges along o's two axes, keyed by axis label
                            let ranges: [(u8, [f64; 2]); 2] = if v.len() == 3 {
                                [(v[1], [x1 - r, x1 + r]), (v[2], [0.0, r - x0])]
                            } else {
                                [(v[2], [0.0, r - x0]), (v[3], [0.0, r - x1])]
                            };
                            let get = |a: u8| ranges.iter().find(|(k, _)| *k == a).unwrap().1;
                            join(&mut bx, [get(ei), get(ej)]);
                        }
                    }
                }
                let Some(b) = bx else { continue };
                let fast_cone = interior.is_some_and(|p| orthant_distance(p, o) == 3);
                let same = interior == Some(o);
                let own = if same { x.raw_coords() } else { [0.0, 0.0] };
                let ru = cell_range(b[0][0], b[0][1], grid);
                let rv = cell_range(b[1][0], b[1][1], grid);
                for i in ru {
                    let u = grid.center(i);
                    for j in rv.clone() {
                        let v = grid.center(j);
                        let d = if x.is_origin() {
                            (u * u + v * v).sqrt()
                        } else if same {
                            ((u - own[0]).powi(2) + (v - own[1]).powi(2)).sqrt()
                        } else if fast_cone {
                            nx + (u * u + v * v).sqrt()
                        } else {
                            distance_unchecked(x, &TreePoint::from_orthant_coords(oid, [u, v]))
                        };
                        if d <= r {
                            visit((o * m + i) * m + j, d);
                        }
                    }
                }
            }
        }
    }
}
