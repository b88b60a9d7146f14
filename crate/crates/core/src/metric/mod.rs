//! Metrics that cast an update direction as natural gradient descent.
//!
//! Given an update `g` and the negative gradient `y` with `yᵀg > 0`, every
//! symmetric positive definite `M` with `Mg = y` has the form
//! `yyᵀ/(yᵀg) + M'` where `M'` vanishes on `g` and is positive definite on
//! `g⊥`. This module builds such metrics, computes the spectrum of the
//! one-parameter family in closed form, and exposes the condition-number
//! and extreme-eigenvalue limits shared by all of them.

mod construct;
mod pair;
mod spectrum;
pub mod strategy;

pub use construct::{
    apply_family_metric, build_canonical_metric, build_family_metric, build_metric_with_complement,
    canonical_decomposition, optimal_metric, verify_natural_gradient_form, CanonicalDecomposition, Metric,
    MetricCertificates, NaturalGradientCheck,
};
pub use pair::{extend_time_varying, ExtendedPair, UpdateGradientPair};
pub use spectrum::{
    closed_form_spectrum, condition_number_bound, extreme_eigenvalue_bounds, EigenvalueBounds, SpectrumReport,
};
pub use strategy::{MetricRegistry, MetricStrategy, StrategyParams};

use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("invalid pair: {0}")]
    InvalidPair(String),

    #[error(
        "update and negative gradient are not aligned: yᵀg = {alignment:e} (threshold {threshold:e}), ψ = {psi} rad"
    )]
    Alignment { psi: f64, alignment: f64, threshold: f64 },

    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),

    #[error("weight {index} must be positive and finite, got {value}")]
    InvalidWeight { index: usize, value: f64 },

    #[error("angle must satisfy |ψ| < π/2, got {0}")]
    InvalidAngle(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("metric certificate failed: {certificate} = {value:e} (bound {bound:e})")]
    Certificate {
        certificate: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("unknown metric strategy `{name}` (available: {available})")]
    UnknownStrategy { name: String, available: String },

    #[error("strategy `{strategy}` requires parameter `{parameter}`")]
    MissingParameter {
        strategy: &'static str,
        parameter: &'static str,
    },

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
