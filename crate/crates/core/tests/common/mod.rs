#![allow(dead_code)]

use awf::{AdditiveFn, ScalarPlf};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::Rng;

/// Random element on `n` increasing knots in `[0, horizon]` with values in
/// `[-1, 1]` after the origin.
pub fn random_plf(rng: &mut StdRng, n: usize, horizon: f64) -> ScalarPlf<f64> {
    let mut knots: Vec<f64> = (0..n - 2).map(|_| rng.random_range(0.0..horizon)).collect();
    knots.push(0.0);
    knots.push(horizon);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut values: Vec<f64> = knots.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    values[0] = 0.0;
    ScalarPlf::new(knots, values).unwrap()
}

/// Random concave, non-decreasing element: slopes are sorted descending
/// and non-negative.
pub fn random_concave(rng: &mut StdRng, cells: usize, horizon: f64, max_slope: f64) -> ScalarPlf<f64> {
    let mut slopes: Vec<f64> = (0..cells).map(|_| rng.random_range(0.0..max_slope)).collect();
    slopes.sort_by(|a, b| b.total_cmp(a));
    let dt = horizon / cells as f64;
    let mut values = vec![0.0];
    for s in &slopes {
        values.push(values.last().unwrap() + s * dt);
    }
    let knots = (0..=cells).map(|k| k as f64 * dt).collect();
    ScalarPlf::new(knots, values).unwrap()
}

pub fn random_additive(rng: &mut StdRng, d: usize, n: usize) -> AdditiveFn<f64> {
    let comps = (0..d)
        .map(|_| {
            let h = rng.random_range(0.5..2.0);
            random_plf(rng, n, h)
        })
        .collect();
    AdditiveFn::new(comps).unwrap()
}

pub fn ramp() -> ScalarPlf<f64> {
    ScalarPlf::ramp(1.0, 1.0).unwrap()
}

/// Proptest strategy for elements with 2..=max_knots knots on `[0, horizon]`.
pub fn plf_strategy(max_knots: usize, horizon: f64) -> impl Strategy<Value = ScalarPlf<f64>> {
    (1..max_knots)
        .prop_flat_map(move |cells| {
            (
                prop::collection::vec(0.05f64..1.0, cells),
                prop::collection::vec(-1.0f64..1.0, cells),
            )
        })
        .prop_map(move |(widths, vals)| {
            let total: f64 = widths.iter().sum();
            let mut knots = vec![0.0];
            let mut acc = 0.0;
            for w in &widths {
                acc += w;
                knots.push(acc / total * horizon);
            }
            *knots.last_mut().unwrap() = horizon;
            let mut values = vec![0.0];
            values.extend(vals);
            ScalarPlf::new(knots, values).unwrap()
        })
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
