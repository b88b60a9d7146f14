//! Numerical tolerances shared by every certificate in the crate.

/// Eigendecomposition: `‖V Vᵀ − I‖_max` bound.
pub const EIGEN_ORTHOGONALITY: f64 = 1e-10;
/// Eigendecomposition: `‖A − V Λ Vᵀ‖_max ≤ EIGEN_RECONSTRUCTION · max(1, ‖A‖_max)`.
pub const EIGEN_RECONSTRUCTION: f64 = 1e-9;

/// Lyapunov residual relative to `‖Q‖_max`.
pub const LYAPUNOV_RESIDUAL: f64 = 1e-9;

/// Complement basis orthogonality, relative to `‖g‖`.
pub const COMPLEMENT_ORTHOGONALITY: f64 = 1e-12;

/// A pair is aligned when `yᵀg > ALIGNMENT · ‖y‖ ‖g‖`.
pub const ALIGNMENT: f64 = 1e-12;

/// Constructed metrics must satisfy `‖Mg − y‖ ≤ METRIC_MAP_RESIDUAL · ‖y‖`.
pub const METRIC_MAP_RESIDUAL: f64 = 1e-10;

/// `verify_natural_gradient_form` thresholds.
pub const VERIFY_MAP_RESIDUAL: f64 = 1e-8;
pub const VERIFY_SYMMETRY_DEFECT: f64 = 1e-12;

/// Taylor identity residual relative to `max(1, |L(θ)|)`.
pub const TAYLOR_RESIDUAL: f64 = 1e-9;

/// Relative finite-difference step for Hessians.
pub const FD_HESSIAN_STEP: f64 = 1e-5;

/// Relative agreement between an oracle gradient and central differences.
pub const GRADIENT_SELF_TEST: f64 = 1e-5;

/// Step reconstruction through `(M̄ + ηH)⁻¹`.
pub const COMBINED_RECONSTRUCTION: f64 = 1e-8;

/// `⟨Hg⟩ᵀ⟨g⟩` below this (relative) skips the stochastic correction.
pub const STOCHASTIC_CORRECTION: f64 = 1e-12;

/// Relative pivot threshold for the dense LU.
pub const LU_PIVOT: f64 = 1e-14;
