//! Projection onto the cone of functions with non-increasing derivative.
//!
//! For a scalar element the projection is the least concave majorant,
//! restricted to be non-decreasing: a concave function on `ℝ₊` that stays
//! above the constant tail `f(T)` cannot decrease. For additive functions the
//! projection acts component by component, and the remainder `f - f̲` lies in
//! the polar cone.

mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pl_fn::{AdditiveFn, PlfError, ScalarPlf};
use crate::real::Real;

pub use oracle::{qp_oracle_projection, QP_MAX_KNOTS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConeError {
    #[error("QP oracle supports at most {max} knots, got {got}")]
    TooManyKnots { got: usize, max: usize },
    #[error("QP oracle did not converge within {0} iterations")]
    NotConverged(usize),
    #[error("QP oracle hit a singular KKT system")]
    SingularSystem,
    #[error(transparent)]
    Plf(#[from] PlfError),
}

/// `f̲ = Pr_V f` together with the polar remainder `f - f̲`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConeDecomposition<T> {
    pub majorant: AdditiveFn<T>,
    pub polar: AdditiveFn<T>,
    pub norms: DecompositionNorms<T>,
    pub orthogonality_residual: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DecompositionNorms<T> {
    pub f: T,
    pub majorant: T,
    pub polar: T,
}

impl<T: Real> ConeDecomposition<T> {
    pub fn norm_majorant(&self) -> T {
        self.norms.majorant
    }

    pub fn norm_polar(&self) -> T {
        self.norms.polar
    }
}

fn slope_tol<T: Real>(slopes: &[T]) -> T {
    let scale = slopes.iter().fold(T::one(), |m, s| m.max(s.abs()));
    T::slope_tolerance() * scale
}

/// Least non-decreasing concave majorant of `f`, reported on `f`'s own knots.
pub fn lcm_scalar<T: Real>(f: &ScalarPlf<T>) -> ScalarPlf<T> {
    let knots = f.knots();
    let values = f.values();
    let n = knots.len();
    let slope = |a: usize, b: usize| (values[b] - values[a]) / (knots[b] - knots[a]);

    // Upper hull; near-collinear middle points are dropped.
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for k in 0..n {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let (s_ab, s_bk) = (slope(a, b), slope(b, k));
            let tol = T::slope_tolerance() * T::one().max(s_ab.abs()).max(s_bk.abs());
            if s_ab > s_bk + tol {
                break;
            }
            hull.pop();
        }
        hull.push(k);
    }

    // Flatten from the first vertex whose outgoing segment decreases.
    let flat_from = hull
        .windows(2)
        .position(|w| slope(w[0], w[1]) < T::zero())
        .map(|p| hull[p]);

    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let v = match flat_from {
            Some(m) if k >= m => values[m],
            _ => {
                while hull[seg + 1] < k {
                    seg += 1;
                }
                let (a, b) = (hull[seg], hull[seg + 1]);
                if k == a {
                    values[a]
                } else if k == b {
                    values[b]
                } else {
                    values[a] + (knots[k] - knots[a]) * slope(a, b)
                }
            }
        };
        out.push(v.max(values[k]));
    }
    ScalarPlf::on_grid(f.grid().clone(), out).expect("majorant inherits a valid grid")
}

/// `f - lcm_scalar(f)`; non-positive everywhere.
pub fn polar_scalar<T: Real>(f: &ScalarPlf<T>) -> ScalarPlf<T> {
    f.sub(&lcm_scalar(f))
}

/// Componentwise projection of an additive function.
pub fn project_additive<T: Real>(f: &AdditiveFn<T>) -> ConeDecomposition<T> {
    let majorant = f.map_components(lcm_scalar);
    let polar = f
        .sub(&majorant)
        .expect("majorant has the same dimension as f");
    let residual = majorant
        .inner(&polar)
        .expect("same dimension")
        .abs();
    ConeDecomposition {
        norms: DecompositionNorms {
            f: f.norm(),
            majorant: majorant.norm(),
            polar: polar.norm(),
        },
        majorant,
        polar,
        orthogonality_residual: residual,
    }
}

/// Non-increasing derivative, including the zero slope beyond the horizon
/// (hence all slopes are non-negative).
///
/// Slopes of narrow cells carry rounding error of order `ε·max|f|/Δt`, which
/// is added to the comparison tolerance.
pub fn is_in_v1<T: Real>(f: &ScalarPlf<T>) -> bool {
    let steps = f.derivative_steps();
    let tol = slope_tol(&steps.slopes);
    let vmax = f.values().iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let widths: Vec<T> = f.knots().windows(2).map(|k| k[1] - k[0]).collect();
    let rounding = |j: usize| {
        let w = widths.get(j).copied().unwrap_or(T::infinity());
        T::lit(8.0) * T::epsilon() * vmax / w
    };
    steps
        .slopes
        .windows(2)
        .enumerate()
        .all(|(j, w)| w[1] <= w[0] + tol + rounding(j) + rounding(j + 1))
}

/// Necessary condition for polar-cone membership: `⟨f, v⟩ ≤ tol` for each probe `v ∈ V₁`.
pub fn is_in_polar_v1<T: Real>(f: &ScalarPlf<T>, probes: &[ScalarPlf<T>]) -> bool {
    let nf = f.norm();
    probes.iter().all(|v| {
        let tol = T::slope_tolerance() * T::one().max(nf * v.norm());
        f.inner(v) <= tol
    })
}
