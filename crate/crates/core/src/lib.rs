//! Reconstruction and analysis of the metric that casts an effective
//! learning rule as natural gradient descent.
//!
//! * [`linalg`]: dense kernels (Jacobi eigensolver, Lyapunov solver, complement bases).
//! * [`metric`]: continuous-time metrics, closed-form spectra and bounds.
//! * [`discrete`]: discrete gradients, discrete and combined metrics, stochastic averaging.
//! * [`experiments`]: LTI and feedback-alignment runs plus the windowed effectiveness check.
//! * [`io`]: CSV/JSON formats for pairs, spectra, traces and reports.

// `!(x > 0.0)` also rejects NaN; index loops mirror the textbook algorithms.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod discrete;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod metric;
pub mod sampling;
pub mod tolerance;
