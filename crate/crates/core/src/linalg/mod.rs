//! Small dense linear algebra kernel.
//!
//! Everything here is sized for desk-scale problems (D up to a few hundred):
//! cyclic Jacobi for symmetric eigenproblems, a Kronecker-vectorized
//! Lyapunov solver, and Householder-based complement bases.

mod eigen;
mod lu;
mod lyapunov;
mod matrix;
mod nonsymmetric;
pub mod vector;

pub use eigen::{sym_eigen, EigenDecomposition};
pub use lu::{lu_solve, LuFactorization};
pub use lyapunov::{lyapunov_residual, solve_lyapunov};
pub use matrix::{Matrix, SymMatrix};
pub use nonsymmetric::{general_eigenvalues, spectral_abscissa};
pub use vector::{angle_between, orthonormal_complement_basis};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("non-finite entry {value} at ({row}, {col}) in {context}")]
    NonFinite {
        context: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("{context}: expected dimension {expected}, found {found}{}", index.map(|i| format!(" (at {i})")).unwrap_or_default())]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
        index: Option<usize>,
    },

    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("{context}: vector has zero norm")]
    ZeroVector { context: &'static str },

    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("Lyapunov certificate violated: {certificate} (value {value:e}, bound {bound:e}); is A Hurwitz?")]
    LyapunovCertificate {
        certificate: &'static str,
        value: f64,
        bound: f64,
    },
}

pub(crate) fn check_finite(context: &'static str, m: &Matrix) -> Result<(), LinalgError> {
    match m.first_non_finite() {
        Some((row, col, value)) => Err(LinalgError::NonFinite {
            context,
            row,
            col,
            value,
        }),
        None => Ok(()),
    }
}

pub(crate) fn check_finite_vec(context: &'static str, v: &[f64]) -> Result<(), LinalgError> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(k) => Err(LinalgError::NonFinite {
            context,
            row: k,
            col: 0,
            value: v[k],
        }),
        None => Ok(()),
    }
}
