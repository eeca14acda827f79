use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::BoundsError;
use crate::pl_fn::{Grid, ScalarPlf};
use crate::real::Real;

/// Non-negative boundary surface `u` over `ℝ₊^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary<T> {
    kind: BoundaryKind<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum BoundaryKind<T> {
    /// `u ≡ c`.
    Constant {
        #[serde(with = "crate::real::extended")]
        c: T,
    },
    /// `u(t) = c + Σ_i u_i(t_i)` with `u_i(0) = 0`.
    SumSeparable { c: T, profiles: Vec<ScalarPlf<T>> },
    /// Multilinear interpolation of a table on a product grid (`d ≤ 3`),
    /// clamped beyond the last knot on each axis. `values` is row-major with
    /// the last axis varying fastest.
    Tabulated {
        axes: Vec<Grid<T>>,
        #[serde(with = "crate::real::extended::vec")]
        values: Vec<T>,
    },
}

pub const MAX_TABULATED_DIM: usize = 3;

impl<T: Real> Boundary<T> {
    pub fn constant(c: T) -> Result<Self, BoundsError> {
        Self::new(BoundaryKind::Constant { c })
    }

    pub fn sum_separable(c: T, profiles: Vec<ScalarPlf<T>>) -> Result<Self, BoundsError> {
        Self::new(BoundaryKind::SumSeparable { c, profiles })
    }

    pub fn tabulated(axes: Vec<Grid<T>>, values: Vec<T>) -> Result<Self, BoundsError> {
        Self::new(BoundaryKind::Tabulated { axes, values })
    }

    pub fn new(kind: BoundaryKind<T>) -> Result<Self, BoundsError> {
        let level_ok = |c: T| !c.is_nan() && c >= T::zero();
        match &kind {
            BoundaryKind::Constant { c } => {
                if !level_ok(*c) {
                    return Err(BoundsError::NegativeBoundary(c.to_f64_lossy()));
                }
            }
            BoundaryKind::SumSeparable { c, profiles } => {
                if profiles.is_empty() {
                    return Err(BoundsError::BoundaryShape("sum_separable needs at least one profile".into()));
                }
                if !c.is_finite() {
                    return Err(BoundsError::NonFiniteBoundary("sum_separable level".into()));
                }
                let low = profiles
                    .iter()
                    .fold(*c, |acc, p| acc + p.value_range().0);
                if !level_ok(low) {
                    return Err(BoundsError::NegativeBoundary(low.to_f64_lossy()));
                }
            }
            BoundaryKind::Tabulated { axes, values } => {
                if axes.is_empty() || axes.len() > MAX_TABULATED_DIM {
                    return Err(BoundsError::BoundaryShape(format!(
                        "tabulated boundary needs 1..={MAX_TABULATED_DIM} axes, got {}",
                        axes.len()
                    )));
                }
                let expected: usize = axes.iter().map(Grid::len).product();
                if values.len() != expected {
                    return Err(BoundsError::BoundaryShape(format!(
                        "tabulated boundary expects {expected} values, got {}",
                        values.len()
                    )));
                }
                if let Some(v) = values.iter().find(|v| !level_ok(**v)) {
                    return Err(BoundsError::NegativeBoundary(v.to_f64_lossy()));
                }
            }
        }
        Ok(Self { kind })
    }

    pub fn kind(&self) -> &BoundaryKind<T> {
        &self.kind
    }

    /// Number of coordinates the boundary is defined on; `None` for constants.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            BoundaryKind::Constant { .. } => None,
            BoundaryKind::SumSeparable { profiles, .. } => Some(profiles.len()),
            BoundaryKind::Tabulated { axes, .. } => Some(axes.len()),
        }
    }

    /// Largest horizon carried by the boundary description itself.
    pub fn horizon(&self) -> T {
        match &self.kind {
            BoundaryKind::Constant { .. } => T::zero(),
            BoundaryKind::SumSeparable { profiles, .. } => {
                profiles.iter().map(ScalarPlf::horizon).fold(T::zero(), T::max)
            }
            BoundaryKind::Tabulated { axes, .. } => axes.iter().map(Grid::horizon).fold(T::zero(), T::max),
        }
    }

    pub fn is_bounded_above(&self) -> bool {
        match &self.kind {
            BoundaryKind::Constant { c } => c.is_finite(),
            BoundaryKind::SumSeparable { c, .. } => c.is_finite(),
            BoundaryKind::Tabulated { values, .. } => values.iter().all(|v| v.is_finite()),
        }
    }

    pub fn evaluate(&self, t: &[T]) -> Result<T, BoundsError> {
        if let Some(bad) = t.iter().find(|x| x.is_nan() || **x < T::zero()) {
            return Err(BoundsError::NegativeTime(bad.to_f64_lossy()));
        }
        if let Some(d) = self.dim() {
            if d != t.len() {
                return Err(BoundsError::DimensionMismatch { left: d, right: t.len() });
            }
        }
        Ok(match &self.kind {
            BoundaryKind::Constant { c } => *c,
            BoundaryKind::SumSeparable { c, profiles } => profiles
                .iter()
                .zip(t)
                .fold(*c, |acc, (p, ti)| acc + p.eval_nonneg(*ti)),
            BoundaryKind::Tabulated { axes, values } => interpolate(axes, values, t),
        })
    }

    /// `u(0,…,t,…,0)` with `t` in slot `axis` of a `dim`-vector.
    pub fn axis_profile(&self, axis: usize, dim: usize, t: T) -> Result<T, BoundsError> {
        if axis >= dim {
            return Err(BoundsError::DimensionMismatch { left: dim, right: axis + 1 });
        }
        let mut point = vec![T::zero(); dim];
        point[axis] = t;
        self.evaluate(&point)
    }

    /// Whether `u` is finite along the `axis` coordinate line.
    pub(crate) fn axis_is_finite(&self, axis: usize) -> bool {
        match &self.kind {
            BoundaryKind::Constant { c } => c.is_finite(),
            BoundaryKind::SumSeparable { c, .. } => c.is_finite(),
            BoundaryKind::Tabulated { axes, values } => {
                let stride: usize = axes[axis + 1..].iter().map(Grid::len).product();
                (0..axes[axis].len()).all(|k| values[k * stride].is_finite())
            }
        }
    }
}

fn interpolate<T: Real>(axes: &[Grid<T>], values: &[T], t: &[T]) -> T {
    // Per axis: lower index and weight of the upper neighbour.
    let mut cells = Vec::with_capacity(axes.len());
    for (grid, ti) in axes.iter().zip(t) {
        match grid.cell_of(*ti) {
            None => cells.push((grid.len() - 1, T::zero())),
            Some(j) => {
                let k = grid.knots();
                cells.push((j, (*ti - k[j]) / (k[j + 1] - k[j])));
            }
        }
    }
    let d = axes.len();
    let mut acc = T::zero();
    for corner in 0..(1usize << d) {
        let mut weight = T::one();
        let mut index = 0usize;
        for (a, grid) in axes.iter().enumerate() {
            let (j, w) = cells[a];
            let upper = corner >> (d - 1 - a) & 1 == 1;
            let (idx, wa) = if upper { (j + 1, w) } else { (j, T::one() - w) };
            weight = weight * wa;
            index = index * grid.len() + idx.min(grid.len() - 1);
        }
        if weight != T::zero() {
            acc = acc + weight * values[index];
        }
    }
    acc
}

impl<T: Real> Serialize for Boundary<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.kind.serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for Boundary<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let kind = BoundaryKind::<T>::deserialize(deserializer)?;
        Boundary::new(kind).map_err(D::Error::custom)
    }
}
