//! Discrete-time learning rules.
//!
//! A step `θ_{t+1} = θ_t + ηg` that decreases the loss can always be written
//! with a positive definite `M̄` acting on the Hessian-based discrete gradient
//! `∇̄L(θ, θ+p) = ∇L(θ) + ½∇²L(θ + λp) p`, where λ comes from the exact
//! Taylor identity. For small enough η, `M̄ + ηH` is positive definite and
//! the step is an honest natural gradient step on `∇L(θ_t)`.

mod gradient;
mod metric;
mod oracle;
pub mod rules;
mod stochastic;

pub use gradient::{discrete_gradient, hessian_discrete_gradient, taylor_lambda, DiscreteGradientResult, DiscreteStep};
pub use metric::{
    build_discrete_metric, certified_step, combined_metric, continuum_limit_probe, discrete_step_reconstruction,
    hessian_negativity, learning_rate_bounds, max_learning_rate, natural_gradient_step_residual, CertifiedStep,
    CombinedMetric, ContinuumProbe, LearningRateBound, ProbeRow,
};
pub use oracle::{
    fd_hessian, gradient_self_test, Cubic, DoubleWell, FnOracle, LossOracle, LossRegistry, Quadratic, Quartic,
    Rosenbrock,
};
pub use rules::{GradientDescent, RotatedGradient, RuleRegistry, UpdateRule};
pub use stochastic::{stochastic_average_metric, stochastic_sample, StochasticMetric, StochasticSample};

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::metric::MetricError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscreteError {
    #[error("step is not effective: L(θ_t) = {before}, L(θ_t+1) = {after}")]
    Effectiveness { before: f64, after: f64 },

    #[error("no Taylor λ found in (0, 1); residual profile {profile:?}")]
    NoRoot { profile: Vec<(f64, f64)> },

    #[error("Taylor identity residual {residual:e} exceeds {bound:e}")]
    TaylorResidual { residual: f64, bound: f64 },

    #[error("learning rate must be positive and finite, got {0}")]
    InvalidEta(f64),

    #[error("gradient self-test failed at probe {probe}: relative error {relative_error:e}")]
    GradientSelfTest { probe: usize, relative_error: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("{0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Metric(#[from] MetricError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
