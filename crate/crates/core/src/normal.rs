//! Standard normal distribution in double precision.

use statrs::distribution::{ContinuousCDF, Normal};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `Φ(x)`, accurate in both tails.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ⁻¹(p)` for `p ∈ (0, 1)`, polished with two Newton steps.
pub fn quantile(p: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut x = std.inverse_cdf(p);
    for _ in 0..2 {
        let dens = pdf(x);
        if dens > 0.0 && x.is_finite() {
            x -= (cdf(x) - p) / dens;
        }
    }
    x
}
