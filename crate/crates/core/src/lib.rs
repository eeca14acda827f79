//! Boundary non-crossing probabilities for additive Wiener fields
//! `W(t) = W_1(t_1) + … + W_d(t_d)` with piecewise-linear trends.
//!
//! The numeric core is generic over [`Real`] (`f64` and `f32`); the
//! aliases below fix the scalar for the common cases.

pub mod bounds;
pub mod cli;
pub mod cone;
pub mod normal;
pub mod pl_fn;
mod real;
pub mod simulate;

pub use bounds::{
    bounds_report, check_condition_31, gamma_sweep, theorem31_upper, Boundary, BoundaryKind, BoundsError,
    BoundsReport,
};
pub use cone::{lcm_scalar, polar_scalar, project_additive, ConeDecomposition, ConeError};
pub use pl_fn::{AdditiveFn, Grid, PlfError, ScalarPlf};
pub use real::Real;
pub use simulate::{girsanov_estimator, noncross_mc, MCEstimate, SimConfig, SimError};

pub type ScalarPlf64 = ScalarPlf<f64>;
pub type ScalarPlf32 = ScalarPlf<f32>;
pub type AdditiveFn64 = AdditiveFn<f64>;
pub type AdditiveFn32 = AdditiveFn<f32>;
pub type Grid64 = Grid<f64>;
pub type Boundary64 = Boundary<f64>;
pub type Boundary32 = Boundary<f32>;
pub type ConeDecomposition64 = ConeDecomposition<f64>;
pub type ConeDecomposition32 = ConeDecomposition<f32>;
pub type BoundsReport64 = BoundsReport<f64>;
