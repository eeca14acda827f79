//! Closed-form and quadrature references for validating the estimators.

use super::SimError;
use crate::normal::{cdf, pdf};

fn positive(name: &str, x: f64) -> Result<(), SimError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(SimError::InvalidOracleInput(format!("{name} must be positive, got {x}")))
    }
}

/// `P(max_{[0,T]} W ≤ u) = 2Φ(u/√T) − 1` (reflection principle).
pub fn oracle_bm_max(u: f64, horizon: f64) -> Result<f64, SimError> {
    positive("u", u)?;
    positive("T", horizon)?;
    Ok(2.0 * cdf(u / horizon.sqrt()) - 1.0)
}

/// `P(max_{[0,T]} (W(t) + c t) ≤ u) = Φ((u − cT)/√T) − e^{2cu} Φ((−u − cT)/√T)`.
pub fn oracle_drifted_noncross(u: f64, drift: f64, horizon: f64) -> Result<f64, SimError> {
    positive("u", u)?;
    positive("T", horizon)?;
    if !drift.is_finite() {
        return Err(SimError::InvalidOracleInput(format!("drift must be finite, got {drift}")));
    }
    let s = horizon.sqrt();
    let a = cdf((u - drift * horizon) / s);
    let b = cdf((-u - drift * horizon) / s);
    let reflected = if b == 0.0 { 0.0 } else { (2.0 * drift * u + b.ln()).exp() };
    Ok((a - reflected).max(0.0))
}

const QUAD_TOL: f64 = 1e-8;

/// `P(M₁ + M₂ ≤ u)` for the maxima of independent Wiener paths on
/// `[0, T₁]` and `[0, T₂]`, i.e. the `d = 2` constant-boundary probability.
pub fn oracle_additive2_const(u: f64, t1: f64, t2: f64) -> Result<f64, SimError> {
    positive("u", u)?;
    positive("T1", t1)?;
    positive("T2", t2)?;
    let (s1, s2) = (t1.sqrt(), t2.sqrt());
    let integrand = |x: f64| 2.0 / s1 * pdf(x / s1) * (2.0 * cdf((u - x) / s2) - 1.0);
    adaptive_simpson(&integrand, 0.0, u, QUAD_TOL)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, SimError> {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, SimError> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(SimError::QuadratureFailed(tol));
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}
