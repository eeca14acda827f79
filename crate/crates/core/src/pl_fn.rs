//! Piecewise-linear elements of the Cameron–Martin space of a Wiener process
//! and of the additive Wiener field.
//!
//! A [`ScalarPlf`] stores the values of `h` on a knot grid starting at `0`
//! with `h(0) = 0`. Between knots `h` is linear, beyond the last knot it is
//! constant, so `h'` is a step function with compact support and every inner
//! product `∫ h' g' ds` is a finite sum over the merged knot grid.
//!
//! An [`AdditiveFn`] is a tuple of scalar components evaluated as
//! `f(t) = Σ f_i(t_i)`. Because every component vanishes at the origin the
//! stored components are exactly the axis restrictions `f(0,…,t_i,…,0)`, and
//! the inner product of two additive functions is the sum of the component
//! inner products.

use std::cmp::Ordering;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlfError {
    #[error("need at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knots and values differ in length ({knots} vs {values})")]
    LengthMismatch { knots: usize, values: usize },
    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },
    #[error("first knot must be 0, got {0}")]
    FirstKnotNonZero(f64),
    #[error("knots not strictly increasing at index {0}")]
    KnotsNotIncreasing(usize),
    #[error("first value must be 0 (h(0) = 0), got {0}")]
    FirstValueNonZero(f64),
    #[error("negative evaluation time {0}")]
    NegativeTime(f64),
    #[error("additive function needs at least one component")]
    EmptyComponents,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
}

/// Strictly increasing knot sequence `0 = t_0 < t_1 < … < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    knots: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(knots: Vec<T>) -> Result<Self, PlfError> {
        if knots.len() < 2 {
            return Err(PlfError::TooFewKnots(knots.len()));
        }
        if let Some(index) = knots.iter().position(|k| !k.is_finite()) {
            return Err(PlfError::NonFinite { what: "knot", index });
        }
        if knots[0] != T::zero() {
            return Err(PlfError::FirstKnotNonZero(knots[0].to_f64_lossy()));
        }
        if let Some(j) = knots.windows(2).position(|w| w[1] <= w[0]) {
            return Err(PlfError::KnotsNotIncreasing(j + 1));
        }
        Ok(Self { knots })
    }

    /// Uniform grid with `cells` cells on `[0, horizon]`.
    pub fn uniform(horizon: T, cells: usize) -> Result<Self, PlfError> {
        let n = T::from_usize(cells).unwrap_or_else(T::nan);
        let knots = (0..=cells)
            .map(|j| {
                if j == cells {
                    horizon
                } else {
                    horizon * T::from_usize(j).unwrap_or_else(T::nan) / n
                }
            })
            .collect();
        Self::new(knots)
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    pub fn horizon(&self) -> T {
        self.knots[self.knots.len() - 1]
    }

    /// Index `j` of the cell `[t_j, t_{j+1})` containing `t`, or `None` if `t ≥ T`.
    pub fn cell_of(&self, t: T) -> Option<usize> {
        if t >= self.horizon() {
            return None;
        }
        let pos = self
            .knots
            .partition_point(|k| *k <= t)
            .saturating_sub(1);
        Some(pos)
    }

    /// Sorted union of two grids' knots (exact duplicates removed).
    pub fn merge(&self, other: &Grid<T>) -> Grid<T> {
        let (a, b) = (&self.knots, &other.knots);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) => match x.partial_cmp(y) {
                    Some(Ordering::Less) => {
                        i += 1;
                        *x
                    }
                    Some(Ordering::Greater) => {
                        j += 1;
                        *y
                    }
                    _ => {
                        i += 1;
                        j += 1;
                        *x
                    }
                },
                (Some(x), None) => {
                    i += 1;
                    *x
                }
                (None, Some(y)) => {
                    j += 1;
                    *y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        Grid { knots: out }
    }
}

/// Derivative of a [`ScalarPlf`]: `slopes[j]` holds on `[breakpoints[j], breakpoints[j+1])`
/// and the final entry (always `0`) holds on `[T, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    pub breakpoints: Vec<T>,
    pub slopes: Vec<T>,
}

impl<T: Real> StepFunction<T> {
    /// Value at `t ≥ 0` (right-continuous).
    pub fn eval(&self, t: T) -> T {
        let idx = self.breakpoints.partition_point(|k| *k <= t).saturating_sub(1);
        self.slopes[idx]
    }

    /// Jumps `s_{j} - s_{j-1}` located at `breakpoints[j]` for `j ≥ 1`.
    pub fn jumps(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.slopes
            .windows(2)
            .zip(self.breakpoints.iter().skip(1))
            .map(|(w, t)| (*t, w[1] - w[0]))
    }
}

/// One-parameter element `h(t) = ∫_0^t h'(s) ds` with piecewise-constant `h'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPlf<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> ScalarPlf<T> {
    pub fn new(knots: Vec<T>, values: Vec<T>) -> Result<Self, PlfError> {
        if knots.len() != values.len() {
            return Err(PlfError::LengthMismatch {
                knots: knots.len(),
                values: values.len(),
            });
        }
        let grid = Grid::new(knots)?;
        Self::on_grid(grid, values)
    }

    pub fn on_grid(grid: Grid<T>, values: Vec<T>) -> Result<Self, PlfError> {
        if grid.len() != values.len() {
            return Err(PlfError::LengthMismatch {
                knots: grid.len(),
                values: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(PlfError::NonFinite { what: "value", index });
        }
        if values[0] != T::zero() {
            return Err(PlfError::FirstValueNonZero(values[0].to_f64_lossy()));
        }
        Ok(Self { grid, values })
    }

    /// The zero function on `[0, horizon]`.
    pub fn zero(horizon: T) -> Result<Self, PlfError> {
        Self::new(vec![T::zero(), horizon], vec![T::zero(), T::zero()])
    }

    /// `t ↦ slope·min(t, horizon)`.
    pub fn ramp(slope: T, horizon: T) -> Result<Self, PlfError> {
        Self::new(vec![T::zero(), horizon], vec![T::zero(), slope * horizon])
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn knots(&self) -> &[T] {
        self.grid.knots()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn horizon(&self) -> T {
        self.grid.horizon()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == T::zero())
    }

    pub fn eval(&self, t: T) -> Result<T, PlfError> {
        if t.is_nan() || t < T::zero() {
            return Err(PlfError::NegativeTime(t.to_f64_lossy()));
        }
        Ok(self.eval_nonneg(t))
    }

    /// Evaluation for callers that already guarantee `t ≥ 0`.
    pub(crate) fn eval_nonneg(&self, t: T) -> T {
        let knots = self.grid.knots();
        match self.grid.cell_of(t) {
            None => self.values[self.values.len() - 1],
            Some(j) => {
                let (t0, t1) = (knots[j], knots[j + 1]);
                if t == t0 {
                    return self.values[j];
                }
                let w = (t - t0) / (t1 - t0);
                self.values[j] + w * (self.values[j + 1] - self.values[j])
            }
        }
    }

    /// Slopes on the `n - 1` cells of the knot grid.
    pub fn cell_slopes(&self) -> Vec<T> {
        self.grid
            .knots()
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
            .collect()
    }

    pub fn derivative_steps(&self) -> StepFunction<T> {
        let mut slopes = self.cell_slopes();
        slopes.push(T::zero());
        StepFunction {
            breakpoints: self.grid.knots().to_vec(),
            slopes,
        }
    }

    /// Exact `∫_{ℝ₊} f'(s) g'(s) ds` on the merged knot grid.
    pub fn inner(&self, other: &ScalarPlf<T>) -> T {
        let fs = self.cell_slopes();
        let gs = other.cell_slopes();
        let (fk, gk) = (self.knots(), other.knots());
        let end = self.horizon().min(other.horizon());
        // Walk the merged breakpoints up to the shorter horizon; beyond it one
        // of the derivatives is zero.
        let (mut i, mut j) = (0usize, 0usize);
        let mut left = T::zero();
        let mut acc = T::zero();
        while left < end {
            let right = fk[i + 1].min(gk[j + 1]);
            acc = acc + fs[i] * gs[j] * (right - left);
            if fk[i + 1] == right {
                i += 1;
            }
            if gk[j + 1] == right {
                j += 1;
            }
            left = right;
            if i + 1 >= fk.len() || j + 1 >= gk.len() {
                break;
            }
        }
        acc
    }

    pub fn norm_squared(&self) -> T {
        self.inner(self)
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    /// Multiplies every value by `factor` (any sign; grid unchanged).
    pub fn scaled(&self, factor: T) -> ScalarPlf<T> {
        ScalarPlf {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| *v * factor).collect(),
        }
    }

    /// Pointwise `self + sign·other` on the merged grid.
    fn combine(&self, other: &ScalarPlf<T>, sign: T) -> ScalarPlf<T> {
        if self.grid == other.grid {
            let values = self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a + sign * *b)
                .collect();
            return ScalarPlf {
                grid: self.grid.clone(),
                values,
            };
        }
        let grid = self.grid.merge(&other.grid);
        let values = grid
            .knots()
            .iter()
            .map(|t| self.eval_nonneg(*t) + sign * other.eval_nonneg(*t))
            .collect();
        ScalarPlf { grid, values }
    }

    pub fn add(&self, other: &ScalarPlf<T>) -> ScalarPlf<T> {
        self.combine(other, T::one())
    }

    pub fn sub(&self, other: &ScalarPlf<T>) -> ScalarPlf<T> {
        self.combine(other, -T::one())
    }

    /// Re-expresses the function on `grid`, which must contain every knot of
    /// `self` for the result to represent the same function.
    pub fn resampled(&self, grid: &Grid<T>) -> ScalarPlf<T> {
        let values = grid
            .knots()
            .iter()
            .map(|t| self.eval_nonneg(*t))
            .collect();
        ScalarPlf {
            grid: grid.clone(),
            values,
        }
    }

    /// Largest and smallest value over `[0, ∞)` (attained at knots).
    pub fn value_range(&self) -> (T, T) {
        self.values
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            })
    }
}

#[derive(Serialize, Deserialize)]
struct RawScalar<T> {
    knots: Vec<T>,
    values: Vec<T>,
}

impl<T: Real> Serialize for ScalarPlf<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RawScalar {
            knots: self.grid.knots.clone(),
            values: self.values.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for ScalarPlf<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawScalar::<T>::deserialize(deserializer)?;
        ScalarPlf::new(raw.knots, raw.values).map_err(D::Error::custom)
    }
}

impl<T: Real> Serialize for Grid<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.knots.serialize(serializer)
    }
}

impl<'de, T: Real> Deserialize<'de> for Grid<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let knots = Vec::<T>::deserialize(deserializer)?;
        Grid::new(knots).map_err(D::Error::custom)
    }
}

/// `f(t) = Σ_i f_i(t_i)` with one [`ScalarPlf`] per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct AdditiveFn<T> {
    components: Vec<ScalarPlf<T>>,
}

impl<T: Real> AdditiveFn<T> {
    pub fn new(components: Vec<ScalarPlf<T>>) -> Result<Self, PlfError> {
        if components.is_empty() {
            return Err(PlfError::EmptyComponents);
        }
        Ok(Self { components })
    }

    /// Additive zero function with `dim` components on `[0, horizon]`.
    pub fn zero(dim: usize, horizon: T) -> Result<Self, PlfError> {
        let c = ScalarPlf::zero(horizon)?;
        Self::new(vec![c; dim])
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarPlf<T>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &ScalarPlf<T> {
        &self.components[i]
    }

    /// Largest component horizon.
    pub fn horizon(&self) -> T {
        self.components
            .iter()
            .map(ScalarPlf::horizon)
            .fold(T::zero(), T::max)
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(ScalarPlf::is_zero)
    }

    pub fn eval(&self, t: &[T]) -> Result<T, PlfError> {
        self.check_dim(t.len())?;
        self.components
            .iter()
            .zip(t)
            .try_fold(T::zero(), |acc, (c, ti)| Ok(acc + c.eval(*ti)?))
    }

    fn check_dim(&self, other: usize) -> Result<(), PlfError> {
        if self.dim() != other {
            return Err(PlfError::DimensionMismatch {
                left: self.dim(),
                right: other,
            });
        }
        Ok(())
    }

    pub fn inner(&self, other: &AdditiveFn<T>) -> Result<T, PlfError> {
        self.check_dim(other.dim())?;
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum())
    }

    pub fn norm_squared(&self) -> T {
        self.components.iter().map(ScalarPlf::norm_squared).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    /// `γ·f` for `γ > 0`.
    pub fn scale(&self, gamma: T) -> Result<AdditiveFn<T>, PlfError> {
        if gamma.is_nan() || gamma <= T::zero() || !gamma.is_finite() {
            return Err(PlfError::NonPositiveScale(gamma.to_f64_lossy()));
        }
        Ok(self.map_components(|c| c.scaled(gamma)))
    }

    pub fn sub(&self, other: &AdditiveFn<T>) -> Result<AdditiveFn<T>, PlfError> {
        self.check_dim(other.dim())?;
        Ok(AdditiveFn {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect(),
        })
    }

    pub fn add(&self, other: &AdditiveFn<T>) -> Result<AdditiveFn<T>, PlfError> {
        self.check_dim(other.dim())?;
        Ok(AdditiveFn {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub(crate) fn map_components(&self, f: impl Fn(&ScalarPlf<T>) -> ScalarPlf<T>) -> Self {
        AdditiveFn {
            components: self.components.iter().map(f).collect(),
        }
    }
}

#[derive(Deserialize)]
#[serde(bound = "T: Real")]
struct RawAdditive<T> {
    components: Vec<ScalarPlf<T>>,
}

impl<'de, T: Real> Deserialize<'de> for AdditiveFn<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawAdditive::<T>::deserialize(deserializer)?;
        AdditiveFn::new(raw.components).map_err(D::Error::custom)
    }
}
