mod common;

use lctree::hull::{HullOptions, Mode};
use lctree::integrate::{grid_integrate, Density, GridSpec};
use lctree::mle::{self, check_existence, fit, psi, sigma, EstimateJson, FitOptions, LogConcaveEstimate, OrthantClass};
use lctree::treespace::point_on_geodesic;
use lctree::{Error, OrthantId, Space, TreePoint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn t3(k: u8, r: f64) -> TreePoint {
    TreePoint::t3(k, r).unwrap()
}

fn t4(i: u8, j: u8, u: f64, v: f64) -> TreePoint {
    TreePoint::t4(i, j, [u, v]).unwrap()
}

fn polar(i: u8, j: u8, r: f64, deg: f64) -> TreePoint {
    let a = deg.to_radians();
    t4(i, j, r * a.cos(), r * a.sin())
}

fn hopts() -> HullOptions<f64> {
    HullOptions::default()
}

#[test]
fn sigma_two_points() {
    let x = [TreePoint::origin(Space::T3), t3(0, 1.0)];
    let s = sigma(&[0.0, 0.0], &x, None, Mode::LogConcave, &hopts()).unwrap();
    assert!((s - 1.0).abs() < 1e-15);
    for c in [-1.0, 0.5, 2.0] {
        let s = sigma(&[c, c], &x, None, Mode::LogConcave, &hopts()).unwrap();
        assert!((s - (-c + c.exp())).abs() < 1e-12);
    }
}

#[test]
fn uniform_fit() {
    let x = [TreePoint::origin(Space::T3), t3(0, 1.0)];
    let est = fit(&x, None, &FitOptions::default()).unwrap();
    assert!((est.sigma - 1.0).abs() < 1e-6);
    for r in [0.0, 0.3, 0.9] {
        assert!((est.density(&t3(0, r)) - 1.0).abs() < 1e-4);
    }
    assert_eq!(est.density(&t3(1, 0.1)), 0.0);

    // coarse grid search over y as the oracle
    let mut best = f64::INFINITY;
    for a in -300..=300 {
        for b in -300..=300 {
            let y = [a as f64 * 0.01, b as f64 * 0.01];
            let s = -(y[0] + y[1]) / 2.0 + lctree::integrate::segment_exp(1.0, y[0], y[1]);
            best = best.min(s);
        }
    }
    assert!((best - est.sigma).abs() < 1e-4);
    assert!((psi(&est.y_star, &x, None, Mode::LogConcave, &hopts()).unwrap() + 1.0).abs() < 1e-6);
}

#[test]
fn symmetric_fit() {
    let x = [t3(0, 1.0), t3(1, 1.0)];
    let est = fit(&x, None, &FitOptions::default()).unwrap();
    for r in [0.0, 0.2, 0.7, 1.0] {
        assert!((est.density(&t3(0, r)) - est.density(&t3(1, r))).abs() < 1e-6);
    }
    assert!((est.normalization - 1.0).abs() < 1e-12);
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let (u, v): (f64, f64) = (rng.gen(), rng.gen());
    (-2.0 * (1.0 - u).ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

#[test]
fn matches_euclidean_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let mut x: Vec<f64> = Vec::new();
        while x.len() < 10 {
            let v = 1.0 + normal(&mut rng);
            if v > 0.0 {
                x.push(v);
            }
        }
        x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (yo, so) = common::euclid_lcmle(&x);
        let pts: Vec<TreePoint> = x.iter().map(|&r| t3(0, r)).collect();
        let est = fit(&pts, None, &FitOptions::default()).unwrap();
        assert!((est.sigma - so).abs() < 1e-4, "{} vs {}", est.sigma, so);
        for (p, y) in pts.iter().zip(&yo) {
            assert!((est.log_density(p) - y).abs() < 1e-3);
        }
    }
}

#[test]
fn bent_fit_on_three_branches() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<TreePoint> = (0..60).map(|i| t3((i % 3) as u8, rng.gen::<f64>() * 2.0)).collect();
    let est = fit(&pts, None, &FitOptions { mode: Mode::Bent, ..Default::default() }).unwrap();
    assert!((est.normalization - 1.0).abs() < 1e-9);
    assert!((est.trace.raw_normalization - 1.0).abs() < 1e-6, "{:?}", (est.trace.raw_normalization, est.trace.iterations, est.trace.evaluations));
    let lc = fit(&pts, None, &FitOptions::default()).unwrap();
    // the bent class is larger, so its likelihood is at least as high
    assert!(est.psi() >= lc.psi() - 1e-6, "{} < {}", est.psi(), lc.psi());
}

fn example7() -> Vec<TreePoint> {
    vec![polar(0, 1, 1.0, 20.0), polar(0, 1, 1.0, 70.0), polar(3, 8, 3.0, 45.0)]
}

#[test]
fn example7_nonexistence() {
    let x = example7();
    let rep = check_existence(&x).unwrap();
    assert!(!rep.overall);
    assert_eq!(rep.class(OrthantId::quad(0, 1).unwrap()), Some(OrthantClass::FullDim));
    assert_eq!(rep.class(OrthantId::quad(3, 8).unwrap()), Some(OrthantClass::LowerDim));
    let mut last = f64::NEG_INFINITY;
    for d in [1.0, 10.0, 100.0] {
        let p = psi(&[-d / 3.0, -d / 3.0, d], &x, None, Mode::LogConcave, &hopts()).unwrap();
        assert!(p > last);
        last = p;
    }
    assert!(matches!(fit(&x, None, &FitOptions::default()), Err(Error::ExistenceViolation(_))));
    let unchecked = FitOptions { check_existence: false, ..Default::default() };
    assert!(matches!(fit(&x, None, &unchecked), Err(Error::Unbounded(_))));
}

#[test]
fn single_orthant_existence() {
    let x = vec![t4(0, 1, 1.0, 0.2), t4(0, 1, 0.3, 1.0), t4(0, 1, 1.0, 1.0)];
    let rep = check_existence(&x).unwrap();
    assert!(rep.overall);
    assert_eq!(rep.orthants.iter().filter(|(_, c)| *c == OrthantClass::FullDim).count(), 1);
    assert!(rep.orthants.iter().all(|(_, c)| matches!(c, OrthantClass::FullDim | OrthantClass::Empty)));
    let collinear = vec![t4(0, 1, 1.0, 1.0), t4(0, 1, 2.0, 2.0), t4(0, 1, 3.0, 3.0)];
    assert!(!check_existence(&collinear).unwrap().overall);
}

#[test]
fn boundary_segment_supported() {
    // triangle in {0,1} with an edge along axis 0; the axis is shared with
    // {0,4} and {0,5}, which only see that edge
    let x = vec![TreePoint::on_axis(0, 0.5).unwrap(), TreePoint::on_axis(0, 2.0).unwrap(), t4(0, 1, 1.0, 1.0)];
    let rep = check_existence(&x).unwrap();
    assert!(rep.overall, "{rep:?}");
    for o in [OrthantId::quad(0, 4).unwrap(), OrthantId::quad(0, 5).unwrap()] {
        assert_eq!(rep.class(o), Some(OrthantClass::BoundaryOnlySupported));
    }
    // without the off-axis point nothing has area
    let bare = vec![TreePoint::on_axis(0, 0.5).unwrap(), TreePoint::on_axis(0, 2.0).unwrap(), TreePoint::on_axis(0, 1.0).unwrap()];
    let rep = check_existence(&bare).unwrap();
    assert!(!rep.overall);
    assert_eq!(rep.class(OrthantId::quad(0, 1).unwrap()), Some(OrthantClass::BoundaryOnlyUnsupported));
}

#[test]
fn example6_area_unchanged() {
    let base = vec![polar(0, 1, 1.0, 20.0), polar(0, 1, 1.0, 70.0), TreePoint::origin(Space::T4)];
    let mut more = base.clone();
    more.push(polar(3, 8, 3.0, 45.0));
    let area = |x: &[TreePoint]| {
        let pts: Vec<_> = x.iter().map(|p| lctree::hull::LabeledPoint::new(*p, 0.0)).collect();
        lctree::hull::hull_2d(&pts, &hopts()).unwrap().total_area()
    };
    assert!((area(&base) - area(&more)).abs() < 1e-9);
    // X3 reaches into the open far quadrant, so the sufficient condition fails
    assert!(!check_existence(&more).unwrap().overall);
}

#[test]
fn t4_fit_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let quads = [(0u8, 1u8), (0, 4), (1, 6)];
    let pts: Vec<TreePoint> = (0..30)
        .map(|i| {
            let (a, b) = quads[i % 3];
            t4(a, b, 0.1 + rng.gen::<f64>(), 0.1 + rng.gen::<f64>())
        })
        .collect();
    let est = fit(&pts, None, &FitOptions::default()).unwrap();
    assert!((est.trace.raw_normalization - 1.0).abs() < 1e-3, "{}", est.trace.raw_normalization);
    let grid = GridSpec::new(0.01, 1.5).unwrap();
    let num = grid_integrate(|x| est.density(x), Space::T4, &grid);
    assert!((num - 1.0).abs() < 2e-2, "{num}");
    for p in &pts {
        assert!(est.log_density(p).is_finite());
    }
    // descent
    assert!(est.trace.sigma_trace.windows(2).all(|w| w[1] <= w[0]));

    let json = serde_json::to_string(&EstimateJson::from(&est)).unwrap();
    let back: LogConcaveEstimate = serde_json::from_str::<EstimateJson>(&json).unwrap().try_into().unwrap();
    for _ in 0..100 {
        let (a, b) = quads[rng.gen_range(0..3)];
        let x = t4(a, b, rng.gen::<f64>() * 1.2, rng.gen::<f64>() * 1.2);
        let (u, v) = (est.log_density(&x), back.log_density(&x));
        assert!(u == v || (u - v).abs() < 1e-12, "{u} vs {v}");
    }
}

#[test]
fn duplicates_merge() {
    let x = [t3(0, 1.0), t3(0, 1.0), t3(1, 0.5), t3(2, 2.0)];
    let (pos, w, map) = mle::merge_duplicates(&x, &[0.25; 4]);
    assert_eq!(pos.len(), 3);
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    assert_eq!(map[0], map[1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigma_is_convex(ks in prop::collection::vec((0u8..3, 0.0f64..3.0), 3..8),
                       y1 in prop::collection::vec(-3.0f64..1.0, 8),
                       y2 in prop::collection::vec(-3.0f64..1.0, 8)) {
        let x: Vec<TreePoint> = ks.iter().map(|&(k, r)| t3(k, r)).collect();
        let n = x.len();
        let (a, b) = (&y1[..n], &y2[..n]);
        let mid: Vec<f64> = a.iter().zip(b).map(|(u, v)| (u + v) / 2.0).collect();
        let s = |y: &[f64]| sigma(y, &x, None, Mode::LogConcave, &hopts()).unwrap();
        prop_assert!(s(&mid) <= (s(a) + s(b)) / 2.0 + 1e-9);
    }

    #[test]
    fn sigma_is_convex_t4(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<TreePoint> = (0..6).map(|_| {
            let OrthantId::Quad(i, j) = OrthantId::from_index(Space::T4, rng.gen_range(0..15)) else { unreachable!() };
            t4(i, j, rng.gen::<f64>() * 2.0, rng.gen::<f64>() * 2.0)
        }).collect();
        let a: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let b: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(u, v)| (u + v) / 2.0).collect();
        let s = |y: &[f64]| sigma(y, &x, None, Mode::LogConcave, &hopts()).unwrap();
        // the skeleton under-approximates the hull, so convexity holds up to its error
        prop_assert!(s(&mid) <= (s(&a) + s(&b)) / 2.0 + 1e-3);
    }

    #[test]
    fn psi_sigma_identity(ks in prop::collection::vec((0u8..3, 0.1f64..3.0), 3..8),
                          y in prop::collection::vec(-3.0f64..1.0, 8)) {
        // on majorized values h̄(X_i) = y_i, so ψ = −σ
        let x: Vec<TreePoint> = ks.iter().map(|&(k, r)| t3(k, r)).collect();
        let n = x.len();
        let h = mle::build_hull(&x, &y[..n], Mode::LogConcave, &hopts()).unwrap();
        let yy: Vec<f64> = x.iter().map(|p| h.evaluate(p)).collect();
        let p = psi(&yy, &x, None, Mode::LogConcave, &hopts()).unwrap();
        let s = sigma(&yy, &x, None, Mode::LogConcave, &hopts()).unwrap();
        prop_assert!((p + s).abs() < 1e-12);
        let p_raw = psi(&y[..n], &x, None, Mode::LogConcave, &hopts()).unwrap();
        prop_assert!(p_raw >= -sigma(&y[..n], &x, None, Mode::LogConcave, &hopts()).unwrap() - 1e-12);
    }

    #[test]
    fn fit_is_log_concave_and_normalized(ks in prop::collection::vec((0u8..3, 0.05f64..3.0), 4..12), seed in 0u64..100) {
        let x: Vec<TreePoint> = ks.iter().map(|&(k, r)| t3(k, r)).collect();
        let est = fit(&x, None, &FitOptions::default()).unwrap();
        prop_assert!((est.trace.raw_normalization - 1.0).abs() < 1e-6);
        prop_assert!(est.trace.sigma_trace.windows(2).all(|w| w[1] <= w[0]));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let (p, q) = (x[rng.gen_range(0..x.len())], x[rng.gen_range(0..x.len())]);
            let l: f64 = rng.gen();
            let m = point_on_geodesic(&p, &q, l).unwrap();
            let want = (1.0 - l) * est.log_density(&p) + l * est.log_density(&q);
            prop_assert!(est.log_density(&m) >= want - 1e-7);
        }
    }

    #[test]
    fn fit_independent_of_start(ks in prop::collection::vec((0u8..3, 0.05f64..3.0), 4..10), shift in -2.0f64..2.0) {
        let x: Vec<TreePoint> = ks.iter().map(|&(k, r)| t3(k, r)).collect();
        let a = fit(&x, None, &FitOptions::default()).unwrap();
        let init: Vec<f64> = (0..x.len()).map(|i| shift + 0.1 * i as f64).collect();
        let b = fit(&x, None, &FitOptions { init: Some(init), ..Default::default() }).unwrap();
        prop_assert!((a.sigma - b.sigma).abs() < 1e-6);
        for p in &x {
            prop_assert!((a.density(p) - b.density(p)).abs() < 1e-4);
        }
    }

    #[test]
    fn shift_equivariance(rs in prop::collection::vec(0.5f64..3.0, 4..10), c in 0.0f64..2.0) {
        let x: Vec<TreePoint> = rs.iter().map(|&r| t3(0, r)).collect();
        let xs: Vec<TreePoint> = rs.iter().map(|&r| t3(0, r + c)).collect();
        let a = fit(&x, None, &FitOptions::default()).unwrap();
        let b = fit(&xs, None, &FitOptions::default()).unwrap();
        for &r in &rs {
            prop_assert!((a.log_density(&t3(0, r)) - b.log_density(&t3(0, r + c))).abs() < 1e-4);
        }
    }
}

#[test]
fn large_single_ray_fit_matches_active_set_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut x: Vec<f64> = (0..300).map(|_| (rng.gen::<f64>() + rng.gen::<f64>() + rng.gen::<f64>()) * 2.0).collect();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // the barrier oracle needs well-separated points
    x.dedup_by(|b, a| *b - *a < 1e-3);
    let (yo, so) = common::euclid_lcmle(&x);
    let pts: Vec<TreePoint> = x.iter().map(|&r| t3(0, r)).collect();
    let est = fit(&pts, None, &FitOptions::default()).unwrap();
    assert!((est.sigma - so).abs() < 1e-7, "{} vs {}", est.sigma, so);
    let sup = pts.iter().zip(&yo).map(|(p, y)| (est.log_density(p) - y).abs()).fold(0.0, f64::max);
    assert!(sup < 1e-4, "{sup}");
    assert!((est.trace.raw_normalization - 1.0).abs() < 1e-7);
    assert!(est.trace.iterations > mle::WARM_ITER, "{}", est.trace.iterations);
}

#[test]
fn knot_set_fit_matches_long_full_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let pts: Vec<TreePoint> = (0..150).map(|i| t3((i % 3) as u8, -(1.0 - rng.gen::<f64>()).ln() * (1.0 + (i % 3) as f64))).collect();
    let n = pts.len();
    let w = vec![1.0 / n as f64; n];
    let h = HullOptions::default();
    for mode in [Mode::LogConcave, Mode::Bent] {
        let est = fit(&pts, None, &FitOptions { mode, ..Default::default() }).unwrap();
        let full = mle::ralg::minimize(
            |y| mle::sigma_grad(y, &pts, &w, mode, &h).unwrap(),
            mle::pilot_values(&pts, &w),
            &mle::ralg::RalgOptions { max_iter: 30000, ftol: 1e-13, xtol: 1e-13, ..Default::default() },
        );
        assert!(est.sigma <= full.f + 1e-9, "{mode:?}: {} vs {}", est.sigma, full.f);
        assert!(est.sigma >= full.f - 1e-7, "{mode:?}: {} vs {}", est.sigma, full.f);
    }
}
