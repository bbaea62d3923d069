mod common;

use std::f64::consts::PI;

use lctree::integrate::{integrate_density, Density, GridSpec};
use lctree::refdensities::*;
use lctree::treespace::geodesic;
use lctree::{OrthantId, Space, TreePoint};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

fn big_phi(x: f64) -> f64 {
    0.5 * erfc(-x / 2f64.sqrt())
}

fn rd(name: &str) -> ReferenceDensity {
    ReferenceDensity::from_name(name).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn normalizers_match_closed_forms() {
    let e1 = (-1f64).exp();
    assert!((rd("case2").normalizer() - (1.0 + e1)).abs() < 1e-3);
    assert!((rd("case5").normalizer() - 1.0).abs() < 1e-6);
    assert!((rd("mix").normalizer() - 1.0).abs() < 1e-6);
    // proportionality constants stated with the case definitions
    let c1 = 1.0 / ((2.0 * PI).sqrt() * (1.0 + big_phi(-1.0)));
    let c2 = 1.0 / (1.0 + e1);
    let c3 = 2.0 / (15.0 * PI);
    let c4 = 1.0 / (3.0 * PI);
    let cg1 = 1.0
        / (2.0 * PI * (big_phi(1.0).powi(2) + 4.0 * big_phi(-1.0) + 1.5 * (e1 - 2.0 * PI.sqrt() * big_phi(-2f64.sqrt()))));
    let cg2 = 1.0
        / (PI / 2.0
            * (big_phi(2.0).powi(2)
                + 4.0 * big_phi(-2.0)
                + 1.5 * ((-4f64).exp() - 4.0 * PI.sqrt() * big_phi(-2.0 * 2f64.sqrt()))));
    for (name, c) in [("case1", c1), ("case2", c2), ("case3", c3), ("case4", c4), ("g1", cg1), ("g2", cg2)] {
        let z = rd(name).normalizer();
        assert!(rel(1.0 / z, c) < 1e-4, "{name}: 1/Z = {} vs {c}", 1.0 / z);
    }
}

#[test]
fn every_reference_integrates_to_one_on_default_grid() {
    for name in ["case1", "case2", "case3", "case4", "case5", "case6", "g1", "g2", "mix"] {
        let r = rd(name);
        let s = integrate_density(&r, &GridSpec::default_for(r.space()));
        assert!((s - 1.0).abs() < 1e-3, "{name}: {s}");
    }
}

#[test]
fn point_values() {
    let c6 = rd("case6");
    let origin3 = TreePoint::origin(Space::T3);
    let e1 = (-1f64).exp();
    assert!((c6.unnormalized(&origin3) - e1 / 3.0).abs() < 1e-15);
    let p = CoalescentParams::new(1.0).unwrap();
    let v: Vec<f64> = (0..3).map(|k| coalescent_density(&p, k, 0.0).unwrap()).collect();
    assert!((v[0] - v[1]).abs() < 1e-16);
    assert_eq!(v[1], v[2]);

    let c5 = rd("case5");
    let phi0 = (-1.0f64 / 10.0).exp() / (2.0 * PI * 5.0).sqrt();
    for k in 0..3 {
        let near = c5.unnormalized(&TreePoint::t3(k, 1e-12).unwrap());
        assert!((near - 2.0 / 3.0 * phi0).abs() < 1e-12);
    }
    assert!((c5.unnormalized(&origin3) - 2.0 / 3.0 * phi0).abs() < 1e-15);

    let c3 = rd("case3");
    let o4 = TreePoint::origin(Space::T4);
    assert!((c3.density(&o4) - 1.0 / c3.normalizer()).abs() < 1e-15);

    let c4 = rd("case4");
    assert_eq!(c4.density(&TreePoint::t4(1, 2, [0.3, 0.4]).unwrap()), 0.0);
    assert!(c4.density(&TreePoint::t4(1, 6, [0.3, 0.4]).unwrap()) > 0.0);
    assert!(c4.eval(&origin3).is_err());

    let c2 = rd("case2");
    assert_eq!(c2.density(&TreePoint::t3(0, 1.5).unwrap()), 0.0);
    assert!(c2.density(&TreePoint::t3(1, 1.5).unwrap()) > 0.0);
}

#[test]
fn case6_matches_coalescent_density() {
    let c6 = rd("case6");
    let p = CoalescentParams::new(1.0).unwrap();
    for k in 0..3u8 {
        for i in 0..50 {
            let x = i as f64 * 0.13;
            let a = c6.unnormalized(&TreePoint::t3(k, x).unwrap());
            assert!((a - coalescent_density(&p, k as usize, x).unwrap()).abs() < 1e-16);
        }
    }
}

#[test]
fn coalescent_weights_and_mass() {
    for t in [0.3, 1.0, 2.5] {
        let p = CoalescentParams::new(t).unwrap();
        assert!((p.topology_probability(1) - (-t).exp() / 3.0).abs() < 1e-15);
        // piecewise Gauss–Legendre, split at the kink x = T
        let gl = common::gauss_legendre(30);
        let mut total = 0.0;
        for k in 0..3 {
            let mut mass = 0.0;
            let pieces = [(0.0, t), (t, t + 10.0), (t + 10.0, t + 30.0), (t + 30.0, t + 80.0)];
            for (a, b) in pieces {
                mass += gl
                    .iter()
                    .map(|&(s, w)| w * (b - a) * coalescent_density(&p, k, a + s * (b - a)).unwrap())
                    .sum::<f64>();
            }
            assert!((mass - p.topology_probability(k)).abs() < 1e-9, "T={t} k={k}");
            let cond: f64 = mass / p.topology_probability(k);
            assert!((cond - 1.0).abs() < 1e-9);
            total += mass;
        }
        assert!((total - 1.0).abs() < 1e-6);
    }
    let far = CoalescentParams::new(40.0).unwrap();
    assert!((far.topology_probability(0) - 1.0).abs() < 1e-15);
    assert!(CoalescentParams::new(0.0).is_err());
}

#[test]
fn exterior_derivatives_and_kirchhoff() {
    let c6 = rd("case6");
    let z = c6.normalizer();
    let e1 = (-1f64).exp();
    let d: Vec<f64> = (0..3).map(|k| exterior_derivative(&c6, OrthantId::Ray(k)).unwrap()).collect();
    assert!((d[0] + 2.0 / 3.0 * e1 / z).abs() < 1e-4, "{}", d[0]);
    assert!((d[1] - e1 / 3.0 / z).abs() < 1e-4);
    assert!((d[2] - e1 / 3.0 / z).abs() < 1e-4);
    assert!(d.iter().sum::<f64>().abs() < 1e-4);

    // φ'(0; 1, 5) = φ(0; 1, 5) / 5
    let c5 = rd("case5");
    let dphi = (-0.1f64).exp() / (10.0 * PI).sqrt() / 5.0;
    let d: Vec<f64> = (0..3).map(|k| exterior_derivative(&c5, OrthantId::Ray(k)).unwrap()).collect();
    assert!((d[0] + 4.0 / 3.0 * dphi).abs() < 1e-4);
    assert!((d[1] - 2.0 / 3.0 * dphi).abs() < 1e-4);
    assert!(d.iter().sum::<f64>().abs() < 1e-4);
    assert!(exterior_derivative(&rd("case3"), OrthantId::Quad(0, 1)).is_err());
}

/// Largest second difference of log f at 21 evenly spaced points of the
/// geodesic from p to q.
fn max_second_difference(f: &ReferenceDensity, p: &TreePoint, q: &TreePoint) -> f64 {
    let g = geodesic(p, q).unwrap();
    let v: Vec<f64> = (0..=20).map(|k| f.density(&g.point_at(k as f64 / 20.0)).ln()).collect();
    v.windows(3).map(|w| w[0] + w[2] - 2.0 * w[1]).fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn log_concave_cases_pass_concavity_probe() {
    for name in ["case1", "case3", "case4"] {
        let f = rd(name);
        let pts = f.sample(400, 11).unwrap();
        for k in 0..200 {
            let s = max_second_difference(&f, &pts[2 * k], &pts[2 * k + 1]);
            assert!(s <= 1e-7, "{name} geodesic {k}: {s}");
        }
    }
}

#[test]
fn bent_cases_fail_across_origin_only() {
    for name in ["case5", "case6"] {
        let f = rd(name);
        let pts = f.sample(2000, 5).unwrap();
        let branch = |x: &TreePoint| x.orthant();
        let same: Vec<(TreePoint, TreePoint)> = pts
            .chunks(2)
            .filter(|c| branch(&c[0]) == branch(&c[1]))
            .map(|c| (c[0], c[1]))
            .take(200)
            .collect();
        assert_eq!(same.len(), 200);
        for (p, q) in &same {
            assert!(max_second_difference(&f, p, q) <= 1e-7, "{name} within branch");
        }
        // across the origin, from branch 0 to branch 1
        let r0: Vec<TreePoint> = pts.iter().filter(|x| x.orthant() == Some(OrthantId::Ray(0))).copied().collect();
        let r1: Vec<TreePoint> = pts.iter().filter(|x| x.orthant() == Some(OrthantId::Ray(1))).copied().collect();
        let violations = r0
            .iter()
            .zip(&r1)
            .take(200)
            .filter(|(p, q)| max_second_difference(&f, p, q) > 1e-7)
            .count();
        assert!(violations > 0, "{name}: no cross-origin violation found");

        // the bent-class origin condition holds for every cross pair
        let y_origin = f.density(&TreePoint::origin(Space::T3)).ln();
        for (p, q) in r0.iter().zip(&r1).take(200) {
            let (a, b) = (f.density(p).ln(), f.density(q).ln());
            let lam = p.norm() / (p.norm() + q.norm());
            let y0 = ((2.0 * (1.0 - lam) * a + lam * b) / (2.0 - lam)).min(((1.0 - lam) * a + 2.0 * lam * b) / (1.0 + lam));
            assert!(y_origin >= y0 - 1e-12, "{name}: {y_origin} < {y0}");
        }
    }
}

#[test]
fn sampler_is_deterministic() {
    let f = rd("case1");
    assert_eq!(f.sample(50, 7).unwrap(), f.sample(50, 7).unwrap());
    assert_ne!(f.sample(50, 7).unwrap(), f.sample(50, 8).unwrap());
    assert!(f.sample(0, 1).is_err());
}

fn chi2_pvalue(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn case1_chi_square_against_analytic_cells() {
    let f = rd("case1");
    let n = 20000;
    let pts = f.sample(n, 2024).unwrap();
    // equal-mass cells: 30 on ray 0, 10 on each other ray
    let total = 1.0 + big_phi(-1.0);
    let edges = |shift: f64, k: usize| -> Vec<f64> {
        let lo = big_phi(shift);
        (0..=k)
            .map(|i| {
                if i == k {
                    return f64::INFINITY;
                }
                let target = lo + (1.0 - lo) * i as f64 / k as f64;
                let (mut a, mut b) = (0.0, 20.0);
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if big_phi(m + shift) < target {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                0.5 * (a + b)
            })
            .collect()
    };
    let mut cells = Vec::new();
    for (ray, shift, k) in [(0u8, -1.0, 30), (1, 1.0, 10), (2, 1.0, 10)] {
        let e = edges(shift, k);
        let mass = (1.0 - big_phi(shift)) / total;
        for w in e.windows(2) {
            cells.push((ray, w[0], w[1], mass / k as f64));
        }
    }
    assert_eq!(cells.len(), 50);
    let mut counts = vec![0usize; 50];
    for x in &pts {
        let ray = match x.orthant() {
            Some(OrthantId::Ray(k)) => k,
            _ => 0,
        };
        let u = x.norm();
        let i = cells.iter().position(|c| c.0 == ray && u >= c.1 && u < c.2).unwrap();
        counts[i] += 1;
    }
    let probs: Vec<f64> = cells.iter().map(|c| c.3).collect();
    let p = chi2_pvalue(&counts, &probs);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn case3_chi_square_and_occupancy() {
    let f = rd("case3");
    let n = 20000;
    let pts = f.sample(n, 99).unwrap();
    // 5 groups of 3 quadrants × 10 radial bins, Rayleigh radial law
    let radii: Vec<f64> = (0..=10).map(|i| if i == 10 { f64::INFINITY } else { 0.3 * i as f64 }).collect();
    let mut probs = Vec::new();
    for _ in 0..5 {
        for w in radii.windows(2) {
            let s = |r: f64| if r.is_infinite() { 0.0 } else { (-r * r / 2.0).exp() };
            probs.push((s(w[0]) - s(w[1])) / 5.0);
        }
    }
    let mut counts = vec![0usize; 50];
    let mut occupancy = [0usize; 15];
    for x in &pts {
        let o = x.orthant().unwrap().index();
        occupancy[o] += 1;
        let b = radii.windows(2).position(|w| x.norm() >= w[0] && x.norm() < w[1]).unwrap();
        counts[(o / 3) * 10 + b] += 1;
    }
    let p = chi2_pvalue(&counts, &probs);
    assert!(p > 0.001, "p = {p}");
    let mean = n as f64 / 15.0;
    let sd = (n as f64 * (1.0 / 15.0) * (14.0 / 15.0)).sqrt();
    for c in occupancy {
        assert!((c as f64 - mean).abs() <= 3.0 * sd, "{occupancy:?}");
    }
}

#[test]
fn case1_branch_ks() {
    let f = rd("case1");
    let pts = f.sample(10000, 3).unwrap();
    let mut u: Vec<f64> = pts
        .iter()
        .filter(|x| x.orthant() == Some(OrthantId::Ray(0)))
        .map(|x| x.norm())
        .collect();
    u.sort_by(f64::total_cmp);
    let m = u.len() as f64;
    let cdf = |x: f64| (big_phi(x - 1.0) - big_phi(-1.0)) / (1.0 - big_phi(-1.0));
    let ks = u
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / m).abs().max(((i + 1) as f64 / m - c).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 1.358 / m.sqrt(), "KS = {ks}");
}

#[test]
fn case4_samples_stay_in_support() {
    let f = rd("case4");
    for x in f.sample(5000, 4).unwrap() {
        assert!(CASE4_SUPPORT.iter().any(|&(i, j)| x.in_closed(OrthantId::Quad(i, j))), "{x:?}");
    }
}

#[test]
fn mixture_labels_follow_components() {
    let f = rd("mix");
    let (pts, labels) = f.sample_labelled(400, 1).unwrap();
    let ones = labels.iter().filter(|&&l| l == 1).count();
    assert!((150..250).contains(&ones));
    let g1 = ReferenceDensity::g_centre(1);
    let g2 = ReferenceDensity::g_centre(2);
    let near = pts
        .iter()
        .zip(&labels)
        .filter(|(x, &l)| {
            let d1 = lctree::treespace::distance(x, &g1).unwrap();
            let d2 = lctree::treespace::distance(x, &g2).unwrap();
            (d1 < d2) == (l == 0)
        })
        .count();
    assert!(near > 300);
}

#[test]
fn reference_json_round_trip() {
    let f = rd("mix");
    let s = serde_json::to_string(&f).unwrap();
    let g: ReferenceDensity = serde_json::from_str(&s).unwrap();
    assert_eq!(f, g);
}

#[test]
fn kde_integrates_to_one() {
    for (name, grid) in [("case2", GridSpec::default_for(Space::T3)), ("case4", GridSpec::new(0.05, 6.0).unwrap())] {
        let pts = rd(name).sample(60, 1).unwrap();
        let k = kde_fit(&pts, None, Some(&grid)).unwrap();
        let s: f64 = k.density_on_grid(&grid).iter().sum::<f64>() * grid.cell_measure(k.space);
        assert!((s - 1.0).abs() < 1e-3, "{name}: {s}");
    }
}

#[test]
fn kde_grid_values_match_pointwise() {
    let grid = GridSpec::new(0.1, 3.0).unwrap();
    let pts = rd("g1").sample(20, 2).unwrap();
    let k = kde_fit(&pts, Some(0.4), Some(&grid)).unwrap();
    let on_grid = k.density_on_grid(&grid);
    let mut i = 0;
    grid.for_each(Space::T4, |_, _, y| {
        assert!((on_grid[i] - k.density(&y)).abs() < 1e-12);
        i += 1;
    });
}

#[test]
fn kde_matches_euclidean_deep_inside() {
    let h = 0.1;
    let gauss = |d: f64, dim: i32| (-d * d / (2.0 * h * h)).exp() / (2.0 * PI * h * h).powf(dim as f64 / 2.0);
    let xs: Vec<f64> = (0..10).map(|i| 5.0 + 0.05 * i as f64).collect();
    let pts: Vec<TreePoint> = xs.iter().map(|&u| TreePoint::t3(2, u).unwrap()).collect();
    let k = kde_fit(&pts, Some(h), None).unwrap();
    for i in 0..50 {
        let u = 4.8 + 0.02 * i as f64;
        let e: f64 = xs.iter().map(|&x| gauss(u - x, 1)).sum::<f64>() / 10.0;
        assert!((k.density(&TreePoint::t3(2, u).unwrap()) - e).abs() < 1e-6);
    }

    let h = 0.2;
    let gauss = |d: f64| (-d * d / (2.0 * h * h)).exp() / (2.0 * PI * h * h);
    let cs: Vec<[f64; 2]> = (0..8).map(|i| [4.0 + 0.1 * i as f64, 4.5 - 0.05 * i as f64]).collect();
    let pts: Vec<TreePoint> = cs.iter().map(|&c| TreePoint::t4(3, 8, c).unwrap()).collect();
    let k = kde_fit(&pts, Some(h), None).unwrap();
    for i in 0..20 {
        let y = [4.1 + 0.03 * i as f64, 4.2];
        let e: f64 = cs.iter().map(|c| gauss(((y[0] - c[0]).powi(2) + (y[1] - c[1]).powi(2)).sqrt())).sum::<f64>() / 8.0;
        let got = k.density(&TreePoint::t4(3, 8, y).unwrap());
        assert!((got - e).abs() < 1e-6, "{got} vs {e}");
    }
}

#[test]
fn kde_flattens_as_bandwidth_grows() {
    let pts = rd("case1").sample(30, 3).unwrap();
    let grid = GridSpec::new(0.05, 4.0).unwrap();
    let mut last = f64::INFINITY;
    for h in [1.0, 10.0, 100.0, 1000.0] {
        let v = kde_fit(&pts, Some(h), Some(&grid)).unwrap().density_on_grid(&grid);
        let ratio = v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(ratio < last);
        last = ratio;
    }
    assert!(last < 1.001, "{last}");
}

#[test]
fn kde_rejects_single_sample() {
    assert!(kde_fit(&[TreePoint::t3(0, 1.0).unwrap()], None, None).is_err());
    assert!(default_bandwidth(&[TreePoint::t3(0, 1.0).unwrap()]).is_err());
}

#[test]
fn default_bandwidth_formula() {
    let pts = rd("case1").sample(100, 8).unwrap();
    let m = lctree::clustering::frechet_mean(&pts, None, &Default::default()).unwrap();
    let s = (pts.iter().map(|x| lctree::treespace::distance(x, &m).unwrap().powi(2)).sum::<f64>() / 100.0).sqrt();
    let h = default_bandwidth(&pts).unwrap();
    assert!((h - 1.06 * s * 100f64.powf(-0.2)).abs() < 1e-12);
}
