//! Integration with respect to the base measure ν (Lebesgue measure on each
//! open orthant; axes and origin are null).

use crate::hull::{ConcavePWL1D, Hull2D};
use crate::treespace::{OrthantId, Space, TreePoint};
use crate::Scalar;

/// Divided difference of `exp` over `nodes` (repeats allowed, up to 4 nodes).
///
/// `exp_dd(&[a, b])` is `(e^b - e^a) / (b - a)`; with a repeated node it
/// becomes the corresponding derivative. Clusters of nearby nodes use a
/// series about their mean, spread-out nodes the sorted recursion.
pub fn exp_dd<T: Scalar>(nodes: &[T]) -> T {
    debug_assert!(!nodes.is_empty() && nodes.len() <= 4);
    let mut v = [T::zero(); 4];
    let k = nodes.len();
    v[..k].copy_from_slice(nodes);
    let v = &mut v[..k];
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    dd_sorted(v)
}

fn dd_sorted<T: Scalar>(v: &[T]) -> T {
    let k = v.len();
    if k == 1 {
        return v[0].exp();
    }
    let spread = v[k - 1] - v[0];
    if spread < T::lit(0.75) {
        return dd_series(v);
    }
    (dd_sorted(&v[1..]) - dd_sorted(&v[..k - 1])) / spread
}

/// e[x_0..x_k] = e^m Σ_j h_j(x - m) / (j + k)!, h_j complete homogeneous.
fn dd_series<T: Scalar>(v: &[T]) -> T {
    const TERMS: usize = 24;
    let k = v.len() - 1;
    let m = v.iter().copied().sum::<T>() / T::lit(v.len() as f64);
    let mut h = [T::zero(); TERMS];
    h[0] = T::one();
    for &x in v {
        let d = x - m;
        for j in 1..TERMS {
            h[j] = h[j] + d * h[j - 1];
        }
    }
    let mut fact = T::one();
    for i in 2..=k {
        fact = fact * T::lit(i as f64);
    }
    let mut sum = T::zero();
    for (j, hj) in h.iter().enumerate() {
        sum = sum + *hj / fact;
        fact = fact * T::lit((j + k + 1) as f64);
    }
    m.exp() * sum
}

/// ∫ exp over a segment of length `len` with end values `a`, `b`.
pub fn segment_exp<T: Scalar>(len: T, a: T, b: T) -> T {
    len * exp_dd(&[a, b])
}

/// Gradient of [`segment_exp`] with respect to the end values.
pub fn segment_exp_grad<T: Scalar>(len: T, a: T, b: T) -> [T; 2] {
    [len * exp_dd(&[a, a, b]), len * exp_dd(&[a, b, b])]
}

/// ∫ exp over a triangle of area `area` with vertex values `v`.
pub fn triangle_exp<T: Scalar>(area: T, v: [T; 3]) -> T {
    (area + area) * exp_dd(&v)
}

/// Gradient of [`triangle_exp`] with respect to the vertex values.
pub fn triangle_exp_grad<T: Scalar>(area: T, v: [T; 3]) -> [T; 3] {
    let a2 = area + area;
    [
        a2 * exp_dd(&[v[0], v[0], v[1], v[2]]),
        a2 * exp_dd(&[v[0], v[1], v[1], v[2]]),
        a2 * exp_dd(&[v[0], v[1], v[2], v[2]]),
    ]
}

/// ∫ exp(h) dν for a 1D concave piecewise-linear function.
pub fn integrate_exp_pwl_1d<T: Scalar>(h: &ConcavePWL1D<T>) -> T {
    h.integral_exp()
}

/// ∫ exp(h̄) dν over the upper faces of a 2D hull.
pub fn integrate_exp_hull_2d<T: Scalar>(h: &Hull2D<T>) -> T {
    h.integral_exp()
}

/// Midpoint-rule grid over `[0, radius]^dim` in every orthant.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec<T> {
    pub spacing: T,
    pub radius: T,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(spacing: T, radius: T) -> crate::Result<Self> {
        if !(spacing > T::zero()) || !(radius > T::zero()) || spacing > radius {
            return Err(crate::Error::OutOfRange(format!(
                "grid spacing {spacing} radius {radius}"
            )));
        }
        Ok(GridSpec { spacing, radius })
    }

    pub fn default_for(space: Space) -> Self {
        match space {
            Space::T3 => GridSpec { spacing: T::lit(0.01), radius: T::lit(10.0) },
            Space::T4 => GridSpec { spacing: T::lit(0.02), radius: T::lit(8.0) },
        }
    }

    /// Cells per axis.
    pub fn cells(&self) -> usize {
        (self.radius / self.spacing).ceil().to_usize().unwrap_or(0)
    }

    pub fn cell_measure(&self, space: Space) -> T {
        self.spacing.powi(space.dim() as i32)
    }

    /// Cell-centre coordinate of index `i`.
    pub fn center(&self, i: usize) -> T {
        (T::lit(i as f64) + T::lit(0.5)) * self.spacing
    }

    /// Total number of grid cells across all orthants.
    pub fn len(&self, space: Space) -> usize {
        space.n_orthants() * self.cells().pow(space.dim() as u32)
    }

    pub fn is_empty(&self, space: Space) -> bool {
        self.len(space) == 0
    }

    /// Visits every cell centre in orthant-major, then u, then v order.
    pub fn for_each(&self, space: Space, mut f: impl FnMut(OrthantId, [T; 2], TreePoint<T>)) {
        let m = self.cells();
        for o in space.orthants() {
            for i in 0..m {
                let u = self.center(i);
                match space {
                    Space::T3 => {
                        let p = TreePoint::from_orthant_coords(o, [u, T::zero()]);
                        f(o, [u, T::zero()], p);
                    }
                    Space::T4 => {
                        for j in 0..m {
                            let v = self.center(j);
                            f(o, [u, v], TreePoint::from_orthant_coords(o, [u, v]));
                        }
                    }
                }
            }
        }
    }
}

/// A density that can be evaluated pointwise and over a whole grid.
pub trait Density<T: Scalar> {
    fn space(&self) -> Space;

    fn density(&self, x: &TreePoint<T>) -> T;

    /// Values at every cell centre of `grid`, in [`GridSpec::for_each`] order.
    fn density_on_grid(&self, grid: &GridSpec<T>) -> Vec<T> {
        let mut out = Vec::with_capacity(grid.len(self.space()));
        grid.for_each(self.space(), |_, _, p| out.push(self.density(&p)));
        out
    }
}

/// Midpoint-rule integral of `f` over tree space.
pub fn grid_integrate<T: Scalar>(f: impl Fn(&TreePoint<T>) -> T, space: Space, grid: &GridSpec<T>) -> T {
    let mut sum = T::zero();
    grid.for_each(space, |_, _, p| sum = sum + f(&p));
    sum * grid.cell_measure(space)
}

/// Grid integral of a [`Density`].
pub fn integrate_density<T: Scalar>(f: &dyn Density<T>, grid: &GridSpec<T>) -> T {
    let s: T = f.density_on_grid(grid).into_iter().sum();
    s * grid.cell_measure(f.space())
}

/// Integrated squared error ∫ (f - g)² dν on the grid.
pub fn ise<T: Scalar>(f: &dyn Density<T>, g: &dyn Density<T>, grid: &GridSpec<T>) -> crate::Result<T> {
    if f.space() != g.space() {
        return Err(crate::Error::SpaceMismatch);
    }
    let a = f.density_on_grid(grid);
    let b = g.density_on_grid(grid);
    let s: T = a.iter().zip(&b).map(|(x, y)| (*x - *y) * (*x - *y)).sum();
    Ok(s * grid.cell_measure(f.space()))
}

/// CSV dump `orthant,u,v,value` of a density on a grid (`v` empty in T3).
pub fn grid_csv<T: Scalar>(f: &dyn Density<T>, grid: &GridSpec<T>) -> String {
    let vals = f.density_on_grid(grid);
    let mut out = String::from("orthant,u,v,value\n");
    let mut k = 0;
    grid.for_each(f.space(), |o, c, _| {
        let ostr = match o {
            OrthantId::Ray(i) => format!("{i}"),
            OrthantId::Quad(i, j) => format!("{i}-{j}"),
        };
        match f.space() {
            Space::T3 => out.push_str(&format!("{ostr},{},,{:e}\n", c[0], vals[k].as_f64())),
            Space::T4 => out.push_str(&format!("{ostr},{},{},{:e}\n", c[0], c[1], vals[k].as_f64())),
        }
        k += 1;
    });
    out
}
