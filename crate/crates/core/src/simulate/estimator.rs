use rayon::prelude::*;

use super::rng::{fill_path, path_rng};
use super::{resolve_shape, MCEstimate, Method, SimConfig, SimError, MEMORY_LIMIT_BYTES};
use crate::bounds::{Boundary, BoundaryKind};
use crate::pl_fn::AdditiveFn;
use crate::real::Real;

/// How the non-crossing event is checked on the simulation grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// `Σ_i max_k (Y_i − u_i)(t_k) ≤ c`; constant and sum-separable boundaries only.
    Separable,
    /// `Σ_i Y_i(t_{k_i}) ≤ u(t_{k_1},…,t_{k_d})` at every grid multi-index.
    FullGrid,
}

#[derive(Clone, Copy)]
enum Target {
    /// Indicator of the event for `W + f`.
    Plain,
    /// Indicator for driftless `W` times the density of the `f`-shifted law.
    Girsanov,
    /// The density alone.
    Weight,
}

struct Prepared<T> {
    d: usize,
    steps: usize,
    sqrt_dt: T,
    dt: f64,
    trend: Vec<Vec<T>>,
    check: PreparedCheck<T>,
    drift: Vec<Vec<f64>>,
    half_sq_norm: f64,
}

enum PreparedCheck<T> {
    Separable { level: T, profiles: Vec<Vec<T>> },
    FullGrid { table: Vec<T> },
}

impl<T: Real> Prepared<T> {
    fn new(f: &AdditiveFn<T>, u: &Boundary<T>, config: &SimConfig, check: Check) -> Result<Self, SimError> {
        let (d, horizon) = resolve_shape(f, u, config)?;
        let steps = config.steps(horizon);
        let h = T::lit(horizon);
        let n = T::from_usize(steps).unwrap_or_else(T::nan);
        let times: Vec<T> = (0..=steps)
            .map(|k| if k == steps { h } else { h * T::from_usize(k).unwrap_or_else(T::nan) / n })
            .collect();
        let dt = horizon / steps as f64;
        let trend: Vec<Vec<T>> = f
            .components()
            .iter()
            .map(|c| times.iter().map(|t| c.eval_nonneg(*t)).collect())
            .collect();

        let check = match (check, u.kind()) {
            (Check::Separable, BoundaryKind::Constant { c }) => PreparedCheck::Separable {
                level: *c,
                profiles: vec![vec![T::zero(); steps + 1]; d],
            },
            (Check::Separable, BoundaryKind::SumSeparable { c, profiles }) => PreparedCheck::Separable {
                level: *c,
                profiles: profiles
                    .iter()
                    .map(|p| times.iter().map(|t| p.eval_nonneg(*t)).collect())
                    .collect(),
            },
            (Check::Separable, BoundaryKind::Tabulated { .. }) => {
                return Err(SimError::InvalidConfig(
                    "separable check needs a constant or sum-separable boundary".into(),
                ))
            }
            (Check::FullGrid, _) => PreparedCheck::FullGrid {
                table: boundary_table(u, &times, d)?,
            },
        };

        let drift: Vec<Vec<f64>> = trend
            .iter()
            .map(|vals| vals.windows(2).map(|w| (w[1] - w[0]).to_f64_lossy()).collect())
            .collect();
        let half_sq_norm = 0.5 * drift.iter().flatten().map(|m| m * m).sum::<f64>() / dt;

        Ok(Self {
            d,
            steps,
            sqrt_dt: T::lit(dt.sqrt()),
            dt,
            trend,
            check,
            drift,
            half_sq_norm,
        })
    }

    /// Fills `paths[i]` with `W_i` (+ `f_i` if `with_trend`) for one path index.
    fn fill(&self, seed: u64, path: u64, with_trend: bool, paths: &mut [Vec<T>]) {
        for (axis, buf) in paths.iter_mut().enumerate() {
            let mut rng = path_rng(seed, axis, path);
            fill_path(&mut rng, self.sqrt_dt, buf);
            if with_trend {
                for (y, m) in buf.iter_mut().zip(&self.trend[axis]) {
                    *y = *y + *m;
                }
            }
        }
    }

    fn event(&self, paths: &[Vec<T>]) -> bool {
        match &self.check {
            PreparedCheck::Separable { level, profiles } => {
                let total = paths
                    .iter()
                    .zip(profiles)
                    .map(|(y, u)| {
                        y.iter()
                            .zip(u)
                            .map(|(a, b)| *a - *b)
                            .fold(T::neg_infinity(), T::max)
                    })
                    .reduce(|a, b| a + b)
                    .unwrap_or_else(T::zero);
                total <= *level
            }
            PreparedCheck::FullGrid { table } => full_grid_ok(paths, table, self.steps + 1, 0, T::zero(), 0),
        }
    }

    fn log_density(&self, paths: &[Vec<T>]) -> f64 {
        let mut acc = 0.0;
        for (w, mu) in paths.iter().zip(&self.drift) {
            for (pair, m) in w.windows(2).zip(mu) {
                if *m != 0.0 {
                    acc += m * (pair[1] - pair[0]).to_f64_lossy();
                }
            }
        }
        acc / self.dt - self.half_sq_norm
    }

    fn run(&self, config: &SimConfig, target: Target) -> (f64, f64) {
        let n = config.n_paths;
        let chunk = config.chunk_size as u64;
        let chunks = n.div_ceil(chunk);
        let partial: Vec<(f64, f64)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut paths = vec![vec![T::zero(); self.steps + 1]; self.d];
                let (mut s1, mut s2) = (0.0f64, 0.0f64);
                for p in c * chunk..((c + 1) * chunk).min(n) {
                    let v = match target {
                        Target::Plain => {
                            self.fill(config.seed, p, true, &mut paths);
                            if self.event(&paths) { 1.0 } else { 0.0 }
                        }
                        Target::Girsanov => {
                            self.fill(config.seed, p, false, &mut paths);
                            if self.event(&paths) {
                                self.log_density(&paths).exp()
                            } else {
                                0.0
                            }
                        }
                        Target::Weight => {
                            self.fill(config.seed, p, false, &mut paths);
                            self.log_density(&paths).exp()
                        }
                    };
                    s1 += v;
                    s2 += v * v;
                }
                (s1, s2)
            })
            .collect();
        partial
            .into_iter()
            .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y))
    }
}

fn full_grid_ok<T: Real>(paths: &[Vec<T>], table: &[T], n: usize, axis: usize, partial: T, base: usize) -> bool {
    let last = axis + 1 == paths.len();
    for (k, y) in paths[axis].iter().enumerate() {
        let s = if axis == 0 { *y } else { partial + *y };
        let idx = base * n + k;
        let ok = if last {
            s <= table[idx]
        } else {
            full_grid_ok(paths, table, n, axis + 1, s, idx)
        };
        if !ok {
            return false;
        }
    }
    true
}

fn boundary_table<T: Real>(u: &Boundary<T>, times: &[T], d: usize) -> Result<Vec<T>, SimError> {
    let n = times.len();
    let entries = (n as f64).powi(d as i32);
    let bytes = entries * std::mem::size_of::<T>() as f64;
    if bytes > MEMORY_LIMIT_BYTES as f64 {
        return Err(SimError::MemoryExhausted {
            required_bytes: bytes.min(u64::MAX as f64) as u64,
            limit_bytes: MEMORY_LIMIT_BYTES,
        });
    }
    let total = n.pow(d as u32);
    let mut table = Vec::with_capacity(total);
    let mut point = vec![T::zero(); d];
    for flat in 0..total {
        let mut rest = flat;
        for a in (0..d).rev() {
            point[a] = times[rest % n];
            rest /= n;
        }
        table.push(u.evaluate(&point)?);
    }
    Ok(table)
}

fn finish(config: &SimConfig, (s1, s2): (f64, f64), method: Method) -> MCEstimate {
    let n = config.n_paths as f64;
    let m1 = s1 / n;
    let m2 = s2 / n;
    MCEstimate {
        p_hat: m1,
        stderr: ((m2 - m1 * m1).max(0.0) / n).sqrt(),
        n_paths: config.n_paths,
        resolution: config.grid_resolution,
        seed: config.seed,
        method,
    }
}

fn default_check<T: Real>(u: &Boundary<T>) -> Check {
    match u.kind() {
        BoundaryKind::Tabulated { .. } => Check::FullGrid,
        _ => Check::Separable,
    }
}

/// Plain indicator estimate of `P(W + f ≤ u on the simulation grid)`.
///
/// Constant and sum-separable boundaries use the per-axis maxima reduction;
/// tabulated boundaries are checked at every grid point.
pub fn noncross_mc<T: Real>(f: &AdditiveFn<T>, u: &Boundary<T>, config: &SimConfig) -> Result<MCEstimate, SimError> {
    let check = default_check(u);
    let prep = Prepared::new(f, u, config, check)?;
    let method = match check {
        Check::Separable => Method::SeparableFast,
        Check::FullGrid => Method::Plain,
    };
    Ok(finish(config, prep.run(config, Target::Plain), method))
}

/// Like [`noncross_mc`] but always checks the full product grid.
pub fn noncross_full_grid<T: Real>(
    f: &AdditiveFn<T>,
    u: &Boundary<T>,
    config: &SimConfig,
) -> Result<MCEstimate, SimError> {
    let prep = Prepared::new(f, u, config, Check::FullGrid)?;
    Ok(finish(config, prep.run(config, Target::Plain), Method::Plain))
}

/// Importance-weighted estimate: driftless fields weighted by
/// `exp(Σ_i ∫ f_i' dW_i − ½‖f‖²)` with the integrals taken over grid cells.
pub fn girsanov_estimator<T: Real>(
    f: &AdditiveFn<T>,
    u: &Boundary<T>,
    config: &SimConfig,
) -> Result<MCEstimate, SimError> {
    let prep = Prepared::new(f, u, config, default_check(u))?;
    Ok(finish(config, prep.run(config, Target::Girsanov), Method::Girsanov))
}

/// Mean of the change-of-measure density over all paths (should be ≈ 1).
pub fn girsanov_weight_mean<T: Real>(f: &AdditiveFn<T>, config: &SimConfig) -> Result<MCEstimate, SimError> {
    let u = Boundary::constant(T::infinity())?;
    let prep = Prepared::new(f, &u, config, Check::Separable)?;
    Ok(finish(config, prep.run(config, Target::Weight), Method::Girsanov))
}

/// Per-path event outcomes for `W + f`, in path order.
pub fn path_indicators<T: Real>(
    f: &AdditiveFn<T>,
    u: &Boundary<T>,
    config: &SimConfig,
    check: Check,
) -> Result<Vec<bool>, SimError> {
    let prep = Prepared::new(f, u, config, check)?;
    let mut paths = vec![vec![T::zero(); prep.steps + 1]; prep.d];
    Ok((0..config.n_paths)
        .map(|p| {
            prep.fill(config.seed, p, true, &mut paths);
            prep.event(&paths)
        })
        .collect())
}
