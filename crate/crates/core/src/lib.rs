//! Tail probabilities of the all-time maximum `M = max_n (S_n + xi_n)` of a
//! random walk with negative drift plus a perturbation sequence.
//!
//! The crate covers the closed form for negated-exponential increments, a
//! Neumann-series solver for the renewal-type integral equation, crude,
//! importance-sampling and conditional Monte Carlo estimators, asymptotic
//! approximations in the light- and heavy-tailed regimes, and bounds.

// `!(a < b)` is used on purpose so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;
pub mod distributions;
pub mod error;
pub mod integral_eq;
pub mod quadrature;
pub mod stats;
pub mod stream;
pub mod tilt;
pub mod walk;

pub use analytic::{AsymptoteReport, Regime};
pub use config::{parse_config, ModelConfig};
pub use distributions::{DistributionSpec, ExpTailFit};
pub use error::{Error, Result};
pub use integral_eq::{Grid, TabulatedFn};
pub use stats::{EstimateResult, Method, Moments};
pub use stream::RandomStream;
pub use tilt::{LundbergSolution, TiltedIncrement};
pub use walk::{Dependence, HittingRecord, ProductionModel, WalkModel};
