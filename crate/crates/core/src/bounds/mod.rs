//! Analytic bounds for non-crossing probabilities of additive Wiener fields.
//!
//! All probabilities that have no closed form (`P₀`, `P_{f-f̲}`) are inputs
//! here; they come from the `simulate` module or from an oracle.

mod boundary;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{is_in_v1, project_additive};
use crate::normal;
use crate::pl_fn::{AdditiveFn, PlfError, ScalarPlf};
use crate::real::Real;
use crate::simulate::MCEstimate;

pub use boundary::{Boundary, BoundaryKind, MAX_TABULATED_DIM};
pub use sweep::{gamma_sweep, write_sweep_csv, ProbabilityEstimator, SweepFlag, SweepRow, SWEEP_CSV_HEADER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("probability {0} outside the admissible range")]
    InvalidProbability(f64),
    #[error("norm must be non-negative, got {0}")]
    NegativeNorm(f64),
    #[error("gamma must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("gamma sequence must be non-empty and strictly increasing")]
    InvalidGammas,
    #[error("majorant component {0} is not in V1 (slopes must be non-increasing and non-negative)")]
    NotInV1(usize),
    #[error("boundary growth condition fails: {0}")]
    ConditionViolated(String),
    #[error("boundary must be non-negative, got {0}")]
    NegativeBoundary(f64),
    #[error("non-finite boundary: {0}")]
    NonFiniteBoundary(String),
    #[error("boundary is not bounded above")]
    Unbounded,
    #[error("invalid boundary shape: {0}")]
    BoundaryShape(String),
    #[error("negative evaluation time {0}")]
    NegativeTime(f64),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("estimator failed: {0}")]
    Estimator(String),
    #[error(transparent)]
    Plf(#[from] PlfError),
}

/// `α = Φ⁻¹(P₀)`; finite only for `P₀ ∈ (0, 1)`.
pub fn alpha_from_p0<T: Real>(p0: T) -> Result<T, BoundsError> {
    let p = p0.to_f64_lossy();
    if !(p > 0.0 && p < 1.0) {
        return Err(BoundsError::InvalidProbability(p));
    }
    Ok(T::lit(normal::quantile(p)))
}

fn check_norm<T: Real>(norm: T) -> Result<(), BoundsError> {
    if norm.is_nan() || norm < T::zero() {
        return Err(BoundsError::NegativeNorm(norm.to_f64_lossy()));
    }
    Ok(())
}

/// `|P_f - P₀| ≤ ‖f‖ / √(2π)`.
pub fn kuelbs_li_gap<T: Real>(norm_f: T) -> Result<T, BoundsError> {
    check_norm(norm_f)?;
    Ok(norm_f / T::lit(2.0 * std::f64::consts::PI).sqrt())
}

/// `(Φ(α - ‖g‖), Φ(α + ‖f‖))` for any `g ≥ f`, typically `g = f̲`.
pub fn sandwich<T: Real>(alpha: T, norm_f: T, norm_g: T) -> Result<(T, T), BoundsError> {
    check_norm(norm_f)?;
    check_norm(norm_g)?;
    let a = alpha.to_f64_lossy();
    let lower = normal::cdf(a - norm_g.to_f64_lossy());
    let upper = normal::cdf(a + norm_f.to_f64_lossy());
    Ok((T::lit(lower), T::lit(upper)))
}

/// `∫ u(0,…,t,…,0) d f̲_i'(t)`: the derivative of a `V₁` element is a
/// non-increasing step function, so the integral is a finite sum of atoms
/// (each non-positive) at the interior breakpoints and at the horizon.
pub fn stieltjes_axis_integral<T: Real>(
    u: &Boundary<T>,
    axis: usize,
    dim: usize,
    majorant: &ScalarPlf<T>,
) -> Result<T, BoundsError> {
    if !is_in_v1(majorant) {
        return Err(BoundsError::NotInV1(axis));
    }
    let steps = majorant.derivative_steps();
    let mut acc = T::zero();
    for (t, jump) in steps.jumps() {
        if jump != T::zero() {
            acc = acc + u.axis_profile(axis, dim, t)? * jump;
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisCondition {
    pub axis: usize,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition31Report {
    pub ok: bool,
    pub axes: Vec<AxisCondition>,
}

/// Checks `lim_{t→∞} u(0,…,t,…,0) f̲_i'(t) = 0` per axis. Derivatives vanish
/// beyond the horizon, so the limit holds whenever `u` is finite on the axis
/// (or the majorant has no slope at all).
pub fn check_condition_31<T: Real>(u: &Boundary<T>, majorant: &AdditiveFn<T>) -> Condition31Report {
    let axes: Vec<AxisCondition> = majorant
        .components()
        .iter()
        .enumerate()
        .map(|(axis, m)| {
            if !is_in_v1(m) {
                return AxisCondition {
                    axis,
                    ok: false,
                    diagnostic: Some("majorant component not in V1".into()),
                };
            }
            if u.dim().is_some_and(|d| d != majorant.dim()) {
                return AxisCondition {
                    axis,
                    ok: false,
                    diagnostic: Some("boundary dimension differs from trend".into()),
                };
            }
            let flat = m.cell_slopes().iter().all(|s| *s == T::zero());
            if flat || u.axis_is_finite(axis) {
                AxisCondition { axis, ok: true, diagnostic: None }
            } else {
                AxisCondition {
                    axis,
                    ok: false,
                    diagnostic: Some(format!("boundary is not finite along axis {axis}")),
                }
            }
        })
        .collect();
    Condition31Report {
        ok: axes.iter().all(|a| a.ok),
        axes,
    }
}

fn check_probability<T: Real>(p: T, allow_one: bool) -> Result<(), BoundsError> {
    let v = p.to_f64_lossy();
    let ok = v > 0.0 && (v < 1.0 || (allow_one && v == 1.0));
    if ok {
        Ok(())
    } else {
        Err(BoundsError::InvalidProbability(v))
    }
}

/// Upper bound `P_{f-f̲} · exp(-Σ_i ∫ u d f̲_i' - ½‖f̲‖²)` with `p_polar ≈ P_{f-f̲}`.
pub fn theorem31_upper<T: Real>(f: &AdditiveFn<T>, u: &Boundary<T>, p_polar: T) -> Result<T, BoundsError> {
    check_probability(p_polar, true)?;
    let majorant = project_additive(f).majorant;
    let cond = check_condition_31(u, &majorant);
    if !cond.ok {
        let msg = cond
            .axes
            .iter()
            .filter_map(|a| a.diagnostic.clone())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(BoundsError::ConditionViolated(msg));
    }
    Ok(p_polar * theorem31_factor(u, &majorant)?.exp())
}

/// The exponent `-Σ_i ∫ u d f̲_i' - ½‖f̲‖²` for a given majorant.
pub fn theorem31_factor<T: Real>(u: &Boundary<T>, majorant: &AdditiveFn<T>) -> Result<T, BoundsError> {
    let d = majorant.dim();
    let mut integral = T::zero();
    for (axis, m) in majorant.components().iter().enumerate() {
        integral = integral + stieltjes_axis_integral(u, axis, d, m)?;
    }
    Ok(-integral - T::lit(0.5) * majorant.norm_squared())
}

/// `-γ²‖f̲‖²/2`.
pub fn log_asymptote<T: Real>(majorant_norm: T, gamma: T) -> Result<T, BoundsError> {
    if gamma.is_nan() || gamma <= T::zero() {
        return Err(BoundsError::NonPositiveGamma(gamma.to_f64_lossy()));
    }
    check_norm(majorant_norm)?;
    Ok(-(gamma * majorant_norm).powi(2) / T::lit(2.0))
}

/// Where a probability used by the bounds came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ProbabilityValue {
    Given { value: f64 },
    Oracle { value: f64 },
    MonteCarlo(MCEstimate),
}

impl ProbabilityValue {
    pub fn value(&self) -> f64 {
        match self {
            ProbabilityValue::Given { value } | ProbabilityValue::Oracle { value } => *value,
            ProbabilityValue::MonteCarlo(est) => est.p_hat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BoundsReport<T> {
    pub alpha: T,
    pub p0: ProbabilityValue,
    pub p_polar: ProbabilityValue,
    pub norm_f: T,
    pub norm_majorant: T,
    pub kuelbs_li_gap: T,
    #[serde(with = "crate::real::extended")]
    pub sandwich_lower: T,
    #[serde(with = "crate::real::extended")]
    pub sandwich_upper: T,
    #[serde(with = "crate::real::extended")]
    pub thm31_upper: T,
    pub condition31_ok: bool,
    pub condition31: Condition31Report,
    #[serde(with = "crate::real::extended")]
    pub log_asymptote: T,
    pub trend: AdditiveFn<T>,
    pub boundary: Boundary<T>,
    pub gamma: T,
}

/// Assembles every bound for the trend `γ·f`.
///
/// `p0` must lie in `(0, 1)`; `p_polar` in `(0, 1]`. If the growth condition
/// fails the report carries `thm31_upper = +∞` and `condition31_ok = false`.
pub fn bounds_report<T: Real>(
    f: &AdditiveFn<T>,
    u: &Boundary<T>,
    gamma: T,
    p0: ProbabilityValue,
    p_polar: ProbabilityValue,
) -> Result<BoundsReport<T>, BoundsError> {
    let alpha = alpha_from_p0(T::lit(p0.value()))?;
    let scaled = f.scale(gamma).map_err(|_| BoundsError::NonPositiveGamma(gamma.to_f64_lossy()))?;
    let base = project_additive(f);
    let dec = project_additive(&scaled);
    let norm_f = dec.norms.f;
    let norm_majorant = dec.norms.majorant;
    let (sandwich_lower, sandwich_upper) = sandwich(alpha, norm_f, norm_majorant)?;
    let condition31 = check_condition_31(u, &dec.majorant);
    let pp = T::lit(p_polar.value());
    check_probability(pp, true)?;
    let thm31_upper = if condition31.ok {
        pp * theorem31_factor(u, &dec.majorant)?.exp()
    } else {
        T::infinity()
    };
    Ok(BoundsReport {
        alpha,
        kuelbs_li_gap: kuelbs_li_gap(norm_f)?,
        sandwich_lower,
        sandwich_upper,
        thm31_upper,
        condition31_ok: condition31.ok,
        condition31,
        log_asymptote: log_asymptote(base.norms.majorant, gamma)?,
        norm_f,
        norm_majorant,
        p0,
        p_polar,
        trend: f.clone(),
        boundary: u.clone(),
        gamma,
    })
}
