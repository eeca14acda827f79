use serde::{Deserialize, Serialize};

use super::rng::{fill_path, path_rng};
use super::{SimConfig, SimError, MEMORY_LIMIT_BYTES};
use crate::real::Real;

/// `n_paths` discrete Wiener paths on a uniform grid, row-major by path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch<T> {
    pub steps: usize,
    pub dt: f64,
    pub n_paths: usize,
    pub data: Vec<T>,
}

impl<T: Real> PathBatch<T> {
    pub fn path(&self, p: usize) -> &[T] {
        let w = self.steps + 1;
        &self.data[p * w..(p + 1) * w]
    }
}

/// Materialises the axis-`axis` paths used by the estimators for this config.
pub fn sample_component_paths<T: Real>(
    config: &SimConfig,
    horizon: f64,
    axis: usize,
) -> Result<PathBatch<T>, SimError> {
    config.validate()?;
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(SimError::InvalidConfig("horizon must be positive".into()));
    }
    let steps = config.steps(horizon);
    let required = (config.n_paths as f64) * ((steps + 1) as f64) * std::mem::size_of::<T>() as f64;
    if required > MEMORY_LIMIT_BYTES as f64 {
        return Err(SimError::MemoryExhausted {
            required_bytes: required.min(u64::MAX as f64) as u64,
            limit_bytes: MEMORY_LIMIT_BYTES,
        });
    }
    let n = config.n_paths as usize;
    let dt = horizon / steps as f64;
    let sqrt_dt = T::lit(dt.sqrt());
    let mut data = vec![T::zero(); n * (steps + 1)];
    for (p, row) in data.chunks_mut(steps + 1).enumerate() {
        fill_path(&mut path_rng(config.seed, axis, p as u64), sqrt_dt, row);
    }
    Ok(PathBatch {
        steps,
        dt,
        n_paths: n,
        data,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEntry {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub empirical: f64,
    pub expected: f64,
    pub stderr: f64,
    #[serde(with = "crate::real::extended")]
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub entries: Vec<CovarianceEntry>,
    pub pass: bool,
}

/// Empirical `E[W(s)W(t)]` of the summed field against `Σ_i s_i ∧ t_i`.
///
/// Probe coordinates are snapped to the nearest simulation grid time; the
/// report lists the snapped points. Passes when every `|z| ≤ 5`.
pub fn covariance_selftest(
    config: &SimConfig,
    horizon: f64,
    probes: &[(Vec<f64>, Vec<f64>)],
) -> Result<CovarianceReport, SimError> {
    config.validate()?;
    let d = config.d.max(1);
    let steps = config.steps(horizon);
    let dt = horizon / steps as f64;
    let snap = |x: f64| -> Result<usize, SimError> {
        if !(0.0..=horizon).contains(&x) {
            return Err(SimError::InvalidConfig(format!("probe coordinate {x} outside [0, {horizon}]")));
        }
        Ok(((x / dt).round() as usize).min(steps))
    };
    let mut idx = Vec::with_capacity(probes.len());
    for (s, t) in probes {
        if s.len() != d || t.len() != d {
            return Err(SimError::DimensionMismatch {
                what: "probe",
                got: s.len().max(t.len()),
                expected: d,
            });
        }
        let si = s.iter().map(|x| snap(*x)).collect::<Result<Vec<_>, _>>()?;
        let ti = t.iter().map(|x| snap(*x)).collect::<Result<Vec<_>, _>>()?;
        idx.push((si, ti));
    }

    let sqrt_dt = dt.sqrt();
    let mut sums = vec![(0.0f64, 0.0f64); probes.len()];
    let mut paths = vec![vec![0.0f64; steps + 1]; d];
    for p in 0..config.n_paths {
        for (axis, buf) in paths.iter_mut().enumerate() {
            fill_path(&mut path_rng(config.seed, axis, p), sqrt_dt, buf);
        }
        for ((si, ti), acc) in idx.iter().zip(sums.iter_mut()) {
            let ws: f64 = si.iter().enumerate().map(|(a, k)| paths[a][*k]).sum();
            let wt: f64 = ti.iter().enumerate().map(|(a, k)| paths[a][*k]).sum();
            let prod = ws * wt;
            acc.0 += prod;
            acc.1 += prod * prod;
        }
    }

    let n = config.n_paths as f64;
    let entries: Vec<CovarianceEntry> = idx
        .iter()
        .zip(&sums)
        .map(|((si, ti), (s1, s2))| {
            let empirical = s1 / n;
            let var = (s2 / n - empirical * empirical).max(0.0);
            let stderr = (var / n).sqrt();
            let expected: f64 = si.iter().zip(ti).map(|(a, b)| (*a.min(b) as f64) * dt).sum();
            let z = if stderr > 0.0 {
                (empirical - expected) / stderr
            } else if empirical == expected {
                0.0
            } else {
                f64::INFINITY
            };
            CovarianceEntry {
                s: si.iter().map(|k| *k as f64 * dt).collect(),
                t: ti.iter().map(|k| *k as f64 * dt).collect(),
                empirical,
                expected,
                stderr,
                z,
            }
        })
        .collect();
    Ok(CovarianceReport {
        pass: entries.iter().all(|e| e.z.abs() <= 5.0),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_start_at_zero_and_memory_is_guarded() {
        let cfg = SimConfig::new(1, 16, 50, 9);
        let batch = sample_component_paths::<f64>(&cfg, 1.0, 0).unwrap();
        assert_eq!(batch.steps, 16);
        assert!((0..50).all(|p| batch.path(p)[0] == 0.0));
        let huge = SimConfig::new(1, 1 << 20, 1 << 20, 9);
        assert!(matches!(
            sample_component_paths::<f64>(&huge, 1.0, 0),
            Err(SimError::MemoryExhausted { .. })
        ));
    }

    #[test]
    fn one_dimensional_covariance() {
        let cfg = SimConfig::new(1, 8, 20_000, 2);
        let rep = covariance_selftest(&cfg, 1.0, &[(vec![0.5], vec![1.0]), (vec![1.0], vec![1.0])]).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.entries[0].expected, 0.5);
        assert_eq!(rep.entries[1].expected, 1.0);
    }
}
