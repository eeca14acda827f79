//! Monte Carlo estimation of non-crossing probabilities.
//!
//! Each `(seed, axis, path)` triple owns an independent ChaCha8 stream, so
//! the estimate does not depend on how paths are split across workers.
//! Chunk sums are combined in chunk order, which makes results
//! bit-reproducible for any thread count.

mod estimator;
mod oracle;
mod paths;
mod rng;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{Boundary, BoundsError};
use crate::pl_fn::{AdditiveFn, PlfError};
use crate::real::Real;

pub use estimator::{
    girsanov_estimator, girsanov_weight_mean, noncross_full_grid, noncross_mc, path_indicators, Check,
};
pub use oracle::{oracle_additive2_const, oracle_bm_max, oracle_drifted_noncross};
pub use paths::{covariance_selftest, sample_component_paths, CovarianceEntry, CovarianceReport, PathBatch};

/// Upper limit on bytes for a materialised path batch or boundary table.
pub const MEMORY_LIMIT_BYTES: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {what} has {got}, expected {expected}")]
    DimensionMismatch { what: &'static str, got: usize, expected: usize },
    #[error("component horizon {component} exceeds simulation horizon {horizon}")]
    HorizonMismatch { component: f64, horizon: f64 },
    #[error("request needs about {required_bytes} bytes (limit {limit_bytes})")]
    MemoryExhausted { required_bytes: u64, limit_bytes: u64 },
    #[error("invalid oracle input: {0}")]
    InvalidOracleInput(String),
    #[error("quadrature did not reach tolerance {0}")]
    QuadratureFailed(f64),
    #[error(transparent)]
    Plf(#[from] PlfError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

fn default_chunk_size() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Field dimension; 0 means "take it from the trend".
    #[serde(default)]
    pub d: usize,
    /// Simulation points per unit time.
    pub grid_resolution: u64,
    pub n_paths: u64,
    pub seed: u64,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    /// Simulation horizon; defaults to the largest horizon in the instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl SimConfig {
    pub fn new(d: usize, grid_resolution: u64, n_paths: u64, seed: u64) -> Self {
        Self {
            d,
            grid_resolution,
            n_paths,
            seed,
            chunk_size: default_chunk_size(),
            horizon: None,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.grid_resolution < 2 {
            return Err(SimError::InvalidConfig("grid_resolution must be at least 2".into()));
        }
        if self.n_paths == 0 {
            return Err(SimError::InvalidConfig("n_paths must be positive".into()));
        }
        if self.chunk_size == 0 {
            return Err(SimError::InvalidConfig("chunk_size must be positive".into()));
        }
        if let Some(h) = self.horizon {
            if !(h.is_finite() && h > 0.0) {
                return Err(SimError::InvalidConfig("horizon must be positive".into()));
            }
        }
        Ok(())
    }

    /// Number of uniform steps covering `[0, horizon]`.
    pub fn steps(&self, horizon: f64) -> usize {
        ((self.grid_resolution as f64) * horizon).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Plain,
    SeparableFast,
    Girsanov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub resolution: u64,
    pub seed: u64,
    pub method: Method,
}

impl MCEstimate {
    /// `p̂ ± z·stderr`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.p_hat - z * self.stderr, self.p_hat + z * self.stderr)
    }
}

/// Simulation horizon and dimension implied by an instance.
pub(crate) fn resolve_shape<T: Real>(
    f: &AdditiveFn<T>,
    u: &Boundary<T>,
    config: &SimConfig,
) -> Result<(usize, f64), SimError> {
    config.validate()?;
    let d = f.dim();
    if config.d != 0 && config.d != d {
        return Err(SimError::DimensionMismatch { what: "config", got: config.d, expected: d });
    }
    if let Some(ud) = u.dim() {
        if ud != d {
            return Err(SimError::DimensionMismatch { what: "boundary", got: ud, expected: d });
        }
    }
    let natural = f.horizon().max(u.horizon()).to_f64_lossy();
    let horizon = match config.horizon {
        Some(h) => {
            let fh = f.horizon().to_f64_lossy();
            if fh > h {
                return Err(SimError::HorizonMismatch { component: fh, horizon: h });
            }
            h
        }
        None => natural,
    };
    Ok((d, horizon))
}
