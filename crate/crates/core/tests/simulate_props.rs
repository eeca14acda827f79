mod common;

use awf::simulate::{
    covariance_selftest, girsanov_weight_mean, noncross_full_grid, oracle_additive2_const, oracle_bm_max,
    path_indicators, sample_component_paths, Check, Method,
};
use awf::{girsanov_estimator, noncross_mc, AdditiveFn, Boundary, Grid, ScalarPlf, SimConfig, SimError};
use common::{random_concave, random_plf};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn zero(d: usize) -> AdditiveFn<f64> {
    AdditiveFn::zero(d, 1.0).unwrap()
}

#[test]
fn increments_have_step_variance() {
    let cfg = SimConfig::new(1, 64, 100_000, 3);
    let batch = sample_component_paths::<f64>(&cfg, 1.0, 0).unwrap();
    let mut n = 0.0;
    let (mut s1, mut s2) = (0.0, 0.0);
    for p in 0..batch.n_paths {
        let path = batch.path(p);
        assert_eq!(path[0], 0.0);
        for w in path.windows(2) {
            let dx = w[1] - w[0];
            s1 += dx;
            s2 += dx * dx;
            n += 1.0;
        }
    }
    let mean = s1 / n;
    let var = s2 / n - mean * mean;
    let dt = batch.dt;
    let sigma = dt * (2.0 / n).sqrt();
    assert!((var - dt).abs() <= 5.0 * sigma, "variance {var} vs step {dt}");
    assert!(mean.abs() <= 5.0 * (dt / n).sqrt());
}

#[test]
fn axes_are_independent_streams() {
    let cfg = SimConfig::new(2, 16, 10, 3);
    let a = sample_component_paths::<f64>(&cfg, 1.0, 0).unwrap();
    let b = sample_component_paths::<f64>(&cfg, 1.0, 1).unwrap();
    assert_ne!(a.data, b.data);
    assert_eq!(a, sample_component_paths::<f64>(&cfg, 1.0, 0).unwrap());
}

#[test]
fn field_covariance_matches_formula() {
    let cfg = SimConfig::new(2, 16, 40_000, 8);
    let probes = vec![
        (vec![1.0, 1.0], vec![1.0, 1.0]),
        (vec![1.0, 0.0], vec![0.0, 1.0]),
        (vec![0.25, 0.5], vec![0.75, 0.25]),
    ];
    let rep = covariance_selftest(&cfg, 1.0, &probes).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.entries[0].expected, 2.0);
    assert_eq!(rep.entries[1].expected, 0.0);
    assert_eq!(rep.entries[2].expected, 0.5);
    assert!((rep.entries[0].empirical - 2.0).abs() < 0.1);

    let one = SimConfig::new(1, 16, 20_000, 8);
    let rep = covariance_selftest(&one, 2.0, &[(vec![0.5], vec![1.5])]).unwrap();
    assert!(rep.pass && rep.entries[0].expected == 0.5);
    assert!(covariance_selftest(&one, 2.0, &[(vec![3.0], vec![1.0])]).is_err());
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let mut rng = StdRng::seed_from_u64(4);
    let f = AdditiveFn::new(vec![random_plf(&mut rng, 6, 1.0), random_plf(&mut rng, 5, 1.0)]).unwrap();
    let u = Boundary::constant(1.5).unwrap();
    let mut cfg = SimConfig::new(2, 64, 30_001, 99);
    cfg.chunk_size = 1000;
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (noncross_mc(&f, &u, &cfg).unwrap(), girsanov_estimator(&f, &u, &cfg).unwrap()))
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
}

#[test]
fn larger_trend_never_raises_the_estimate() {
    let mut rng = StdRng::seed_from_u64(5);
    let cfg = SimConfig::new(2, 32, 4000, 6);
    let u = Boundary::constant(1.2).unwrap();
    for _ in 0..10 {
        let f = AdditiveFn::new(vec![random_plf(&mut rng, 6, 1.0), random_plf(&mut rng, 6, 1.0)]).unwrap();
        let bump = AdditiveFn::new(vec![random_concave(&mut rng, 3, 1.0, 1.0), ScalarPlf::zero(1.0).unwrap()]).unwrap();
        let g = f.add(&bump).unwrap();
        for check in [Check::Separable, Check::FullGrid] {
            let a = path_indicators(&f, &u, &cfg, check).unwrap();
            let b = path_indicators(&g, &u, &cfg, check).unwrap();
            assert!(a.iter().zip(&b).all(|(fa, gb)| !*gb || *fa));
        }
    }
}

#[test]
fn higher_boundary_never_lowers_the_estimate() {
    let cfg = SimConfig::new(1, 128, 20_000, 7);
    let f = AdditiveFn::new(vec![ScalarPlf::ramp(0.5, 1.0).unwrap()]).unwrap();
    let mut prev = 0.0;
    for c in [0.25, 0.5, 1.0, 1.5, 3.0] {
        let p = noncross_mc(&f, &Boundary::constant(c).unwrap(), &cfg).unwrap().p_hat;
        assert!(p >= prev);
        prev = p;
    }
}

#[test]
fn separable_check_equals_full_grid_check() {
    let mut rng = StdRng::seed_from_u64(6);
    let cfg = SimConfig::new(2, 64, 3000, 10);
    for _ in 0..4 {
        let f = AdditiveFn::new(vec![random_plf(&mut rng, 5, 1.0), random_plf(&mut rng, 5, 1.0)]).unwrap();
        let profiles = vec![random_concave(&mut rng, 3, 1.0, 0.8), random_plf(&mut rng, 4, 1.0)];
        let lift = -profiles[1].value_range().0;
        let boundaries = [
            Boundary::constant(rng.random_range(0.5..2.5)).unwrap(),
            Boundary::sum_separable(1.0 + lift, profiles).unwrap(),
        ];
        for u in &boundaries {
            let a = path_indicators(&f, u, &cfg, Check::Separable).unwrap();
            let b = path_indicators(&f, u, &cfg, Check::FullGrid).unwrap();
            assert_eq!(a, b);
            let fast = noncross_mc(&f, u, &cfg).unwrap();
            let slow = noncross_full_grid(&f, u, &cfg).unwrap();
            assert_eq!(fast.method, Method::SeparableFast);
            assert_eq!(fast.p_hat, slow.p_hat);
        }
    }
}

#[test]
fn grid_refinement_lowers_the_estimate() {
    let u = Boundary::constant(1.0).unwrap();
    let oracle = oracle_bm_max(1.0, 1.0).unwrap();
    let est: Vec<_> = [64u64, 256, 1024, 4096]
        .iter()
        .map(|r| noncross_mc(&zero(1), &u, &SimConfig::new(1, *r, 40_000, 17)).unwrap())
        .collect();
    for e in &est {
        assert!(e.p_hat >= oracle - 3.0 * e.stderr, "{e:?}");
    }
    let p: Vec<f64> = est.iter().map(|e| e.p_hat).collect();
    assert!(p[0] > p[2] && p[0] > p[3] && p[1] > p[3], "{p:?}");
    // least-squares slope against log resolution
    let xs: Vec<f64> = [64f64, 256.0, 1024.0, 4096.0].iter().map(|r| r.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, p.iter().sum::<f64>() / 4.0);
    let slope: f64 = xs.iter().zip(&p).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>();
    assert!(slope < 0.0, "{p:?}");
}

#[test]
fn girsanov_weights_average_to_one() {
    let cfg = SimConfig::new(2, 64, 50_000, 12);
    let f = AdditiveFn::new(vec![
        ScalarPlf::new(vec![0.0, 0.3, 0.7, 1.0], vec![0.0, 0.3, -0.1, 0.2]).unwrap(),
        ScalarPlf::new(vec![0.0, 0.5, 1.0], vec![0.0, -0.25, 0.05]).unwrap(),
    ])
    .unwrap();
    let m = girsanov_weight_mean(&f, &cfg).unwrap();
    assert!((m.p_hat - 1.0).abs() <= 5.0 * m.stderr, "{m:?}");
    assert!(m.stderr < 0.02);
}

#[test]
fn girsanov_with_zero_trend_is_plain_estimate() {
    let cfg = SimConfig::new(1, 256, 10_000, 3);
    let u = Boundary::constant(1.0).unwrap();
    let a = noncross_mc(&zero(1), &u, &cfg).unwrap();
    let b = girsanov_estimator(&zero(1), &u, &cfg).unwrap();
    assert_eq!((a.p_hat, a.stderr), (b.p_hat, b.stderr));
    assert_eq!(b.method, Method::Girsanov);
}

#[test]
fn two_dimensional_constant_boundary_matches_quadrature() {
    // at resolution 4096 the grid bias is about 0.006
    let cfg = SimConfig::new(2, 4096, 10_000, 31);
    let est = noncross_mc(&zero(2), &Boundary::constant(2.0).unwrap(), &cfg).unwrap();
    let oracle = oracle_additive2_const(2.0, 1.0, 1.0).unwrap();
    assert!((est.p_hat - oracle).abs() <= 3.0 * est.stderr + 0.01, "{est:?} vs {oracle}");
}

#[test]
fn constant_table_behaves_like_constant_boundary() {
    let cfg = SimConfig::new(2, 16, 3000, 2);
    let f = AdditiveFn::new(vec![ScalarPlf::ramp(0.3, 1.0).unwrap(), ScalarPlf::ramp(0.6, 1.0).unwrap()]).unwrap();
    let axes = vec![Grid::new(vec![0.0, 0.5, 1.0]).unwrap(), Grid::new(vec![0.0, 1.0]).unwrap()];
    let table = Boundary::tabulated(axes, vec![1.5; 6]).unwrap();
    let a = noncross_mc(&f, &table, &cfg).unwrap();
    let b = noncross_mc(&f, &Boundary::constant(1.5).unwrap(), &cfg).unwrap();
    assert_eq!(a.p_hat, b.p_hat);
    assert_eq!(a.method, Method::Plain);
}

#[test]
fn oversized_tables_are_refused() {
    let axes = vec![Grid::new(vec![0.0, 1.0]).unwrap(); 3];
    let u = Boundary::tabulated(axes, vec![1.0; 8]).unwrap();
    let cfg = SimConfig::new(3, 2048, 10, 1);
    let err = noncross_mc(&zero(3), &u, &cfg).unwrap_err();
    assert!(matches!(err, SimError::MemoryExhausted { required_bytes, .. } if required_bytes > 1 << 30));
}

#[test]
fn shape_errors() {
    let u = Boundary::constant(1.0).unwrap();
    assert!(matches!(
        noncross_mc(&zero(2), &u, &SimConfig::new(3, 16, 10, 1)),
        Err(SimError::DimensionMismatch { .. })
    ));
    let long = AdditiveFn::new(vec![ScalarPlf::ramp(1.0, 2.0).unwrap()]).unwrap();
    assert!(matches!(
        noncross_mc(&long, &u, &SimConfig::new(1, 16, 10, 1).with_horizon(1.0)),
        Err(SimError::HorizonMismatch { .. })
    ));
    assert!(noncross_mc(&zero(1), &u, &SimConfig::new(1, 1, 10, 1)).is_err());
    assert!(noncross_mc(&zero(1), &u, &SimConfig::new(1, 16, 0, 1)).is_err());
}

#[test]
fn single_precision_estimator_runs() {
    let f = AdditiveFn::<f32>::zero(1, 1.0).unwrap();
    let u = Boundary::<f32>::constant(1.0).unwrap();
    let est = noncross_mc(&f, &u, &SimConfig::new(1, 256, 20_000, 3)).unwrap();
    assert!((est.p_hat - 0.6827).abs() < 0.03);
}

#[test]
fn estimate_json_shape() {
    let est = noncross_mc(&zero(1), &Boundary::constant(1.0).unwrap(), &SimConfig::new(1, 16, 100, 3)).unwrap();
    let v: serde_json::Value = serde_json::to_value(&est).unwrap();
    for key in ["p_hat", "stderr", "n_paths", "resolution", "seed", "method"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["method"], "separable_fast");
}
