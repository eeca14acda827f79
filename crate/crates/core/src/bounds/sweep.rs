use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{log_asymptote, BoundsError, Boundary};
use crate::cone::project_additive;
use crate::pl_fn::AdditiveFn;
use crate::real::Real;

pub const SWEEP_CSV_HEADER: &str = "gamma,ln_p_hat,stderr_ln,asymptote,ratio,flag";

/// Source of `(estimate, stderr)` for `P_{γf}`.
pub trait ProbabilityEstimator<T>: Sync {
    fn estimate(&self, f: &AdditiveFn<T>, u: &Boundary<T>) -> Result<(f64, f64), BoundsError>;

    /// Whether `estimate` may be called from several threads at once.
    fn concurrent(&self) -> bool {
        true
    }
}

impl<T, F> ProbabilityEstimator<T> for F
where
    F: Fn(&AdditiveFn<T>, &Boundary<T>) -> Result<(f64, f64), BoundsError> + Sync,
{
    fn estimate(&self, f: &AdditiveFn<T>, u: &Boundary<T>) -> Result<(f64, f64), BoundsError> {
        self(f, u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepFlag {
    Ok,
    /// The estimator returned 0; use the closed form or importance sampling.
    Underflow,
    /// The asymptote is 0 (`f̲ = 0`), so the ratio is undefined.
    Degenerate,
}

impl SweepFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepFlag::Ok => "ok",
            SweepFlag::Underflow => "underflow",
            SweepFlag::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub ln_p_hat: f64,
    pub stderr_ln: f64,
    pub asymptote: f64,
    pub ratio: f64,
    pub flag: SweepFlag,
}

/// `ln P̂_{γf}` against `-γ²‖f̲‖²/2` over increasing `γ`.
pub fn gamma_sweep<T: Real, E: ProbabilityEstimator<T> + ?Sized>(
    f: &AdditiveFn<T>,
    u: &Boundary<T>,
    gammas: &[T],
    estimator: &E,
) -> Result<Vec<SweepRow>, BoundsError> {
    if gammas.is_empty() || gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(BoundsError::InvalidGammas);
    }
    if let Some(g) = gammas.iter().find(|g| **g <= T::zero()) {
        return Err(BoundsError::NonPositiveGamma(g.to_f64_lossy()));
    }
    if !u.is_bounded_above() {
        return Err(BoundsError::Unbounded);
    }
    let majorant_norm = project_additive(f).norms.majorant;

    let row = |gamma: &T| -> Result<SweepRow, BoundsError> {
        let scaled = f.scale(*gamma)?;
        let (p, se) = estimator.estimate(&scaled, u)?;
        let asymptote = log_asymptote(majorant_norm, *gamma)?.to_f64_lossy();
        let gamma = gamma.to_f64_lossy();
        if p <= 0.0 {
            return Ok(SweepRow {
                gamma,
                ln_p_hat: f64::NEG_INFINITY,
                stderr_ln: f64::NAN,
                asymptote,
                ratio: f64::NAN,
                flag: SweepFlag::Underflow,
            });
        }
        let ln_p_hat = p.ln();
        let (ratio, flag) = if asymptote == 0.0 {
            (f64::NAN, SweepFlag::Degenerate)
        } else {
            (ln_p_hat / asymptote, SweepFlag::Ok)
        };
        Ok(SweepRow {
            gamma,
            ln_p_hat,
            stderr_ln: se / p,
            asymptote,
            ratio,
            flag,
        })
    };

    if estimator.concurrent() {
        gammas.par_iter().map(row).collect()
    } else {
        gammas.iter().map(row).collect()
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.gamma,
            r.ln_p_hat,
            r.stderr_ln,
            r.asymptote,
            r.ratio,
            r.flag.as_str()
        )?;
    }
    Ok(())
}
