use serde::{Deserialize, Serialize};

use super::{optimal_spectrum, ExperimentError, TraceBuilder, TrajectoryTrace};
use crate::linalg::vector::{axpy, dot, norm, sub};
use crate::linalg::{lu_solve, lyapunov_residual, solve_lyapunov, spectral_abscissa, Matrix, SymMatrix};
use crate::metric::{optimal_metric, UpdateGradientPair};
use crate::sampling::{gaussian_matrix, seeded_rng};

/// Distance kept between the spectrum of a generated system and the
/// imaginary axis.
const HURWITZ_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HurwitzSource {
    Matrix(Matrix),
    /// `R − (max Re λ(R) + 0.5) I` with `R` standard normal.
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtiConfig {
    pub dim: usize,
    pub a: HurwitzSource,
    pub theta0: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    /// Window for the effectiveness report.
    pub window_m: usize,
}

impl LtiConfig {
    pub fn with_matrix(a: Matrix, theta0: Vec<f64>, dt: f64, t_end: f64) -> Self {
        Self {
            dim: a.rows(),
            a: HurwitzSource::Matrix(a),
            theta0,
            dt,
            t_end,
            window_m: 1,
        }
    }

    pub fn random(dim: usize, seed: u64, dt: f64, t_end: f64) -> Self {
        Self {
            dim,
            a: HurwitzSource::Random { seed },
            theta0: vec![1.0; dim],
            dt,
            t_end,
            window_m: 1,
        }
    }

    pub fn step_count(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtiRun {
    pub a: Matrix,
    /// Solution of `PA + AᵀP = −I`.
    pub p: SymMatrix,
    pub lyapunov_residual: f64,
    pub states: Vec<Vec<f64>>,
    /// `‖−M⁻¹∇L − g‖ / ‖g‖` with the dense optimal metric.
    pub reconstruction_residuals: Vec<f64>,
    pub trace: TrajectoryTrace,
}

pub fn random_hurwitz(dim: usize, seed: u64) -> Result<Matrix, ExperimentError> {
    if dim == 0 {
        return Err(ExperimentError::Config("dimension must be at least 1".into()));
    }
    let r = gaussian_matrix(&mut seeded_rng(seed), dim, dim);
    let shift = spectral_abscissa(&r)? + HURWITZ_MARGIN;
    Ok(r.sub(&Matrix::identity(dim).scaled(shift)))
}

fn resolve(config: &LtiConfig) -> Result<Matrix, ExperimentError> {
    let a = match &config.a {
        HurwitzSource::Matrix(a) => a.clone(),
        HurwitzSource::Random { seed } => random_hurwitz(config.dim, *seed)?,
    };
    if !a.is_square() || a.rows() != config.dim {
        return Err(ExperimentError::Config(format!(
            "A is {}×{} but dim = {}",
            a.rows(),
            a.cols(),
            config.dim
        )));
    }
    if config.theta0.len() != config.dim {
        return Err(ExperimentError::Config(format!(
            "theta0 has {} entries, expected {}",
            config.theta0.len(),
            config.dim
        )));
    }
    if !(config.dt > 0.0 && config.dt.is_finite() && config.t_end > 0.0 && config.t_end.is_finite()) {
        return Err(ExperimentError::Config(format!(
            "dt = {} and t_end = {} must be positive",
            config.dt, config.t_end
        )));
    }
    if config.theta0.iter().all(|v| *v == 0.0) || config.theta0.iter().any(|v| !v.is_finite()) {
        return Err(ExperimentError::Config("theta0 must be finite and nonzero".into()));
    }
    let abscissa = spectral_abscissa(&a)?;
    if !(abscissa < 0.0) {
        return Err(ExperimentError::Config(format!(
            "A is not Hurwitz: max Re λ = {abscissa}"
        )));
    }
    Ok(a)
}

fn rk4(a: &Matrix, theta: &[f64], dt: f64) -> Vec<f64> {
    let k1 = a.mul_vec(theta);
    let k2 = a.mul_vec(&axpy(theta, dt / 2.0, &k1));
    let k3 = a.mul_vec(&axpy(theta, dt / 2.0, &k2));
    let k4 = a.mul_vec(&axpy(theta, dt, &k3));
    (0..theta.len())
        .map(|i| theta[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Integrates `dθ/dt = Aθ` with RK4 and records, at every grid point, the
/// pair `(Aθ, −2Pθ)` for the Lyapunov loss `θᵀPθ`.
pub fn run_lti(config: &LtiConfig) -> Result<LtiRun, ExperimentError> {
    let a = resolve(config)?;
    let q = SymMatrix::identity(config.dim);
    let p = solve_lyapunov(&a, &q)?;
    let lyap = lyapunov_residual(&a, &p, &q);

    let steps = config.step_count();
    let mut theta = config.theta0.clone();
    let mut states = Vec::with_capacity(steps + 1);
    let mut recon = Vec::with_capacity(steps + 1);
    let mut trace = TraceBuilder::default();
    let mut truncated = None;
    for k in 0..=steps {
        let g = a.mul_vec(&theta);
        let y: Vec<f64> = p.mul_vec(&theta).iter().map(|v| -2.0 * v).collect();
        let loss = dot(&theta, &p.mul_vec(&theta));
        let pair = match UpdateGradientPair::new(g, y) {
            Ok(pair) if pair.is_aligned() => pair,
            Ok(_) | Err(_) => {
                truncated = Some(format!("pair not aligned at step {k}, t = {}", k as f64 * config.dt));
                break;
            }
        };
        let spectrum = optimal_spectrum(&pair)?;
        let m = optimal_metric(&pair)?;
        let x = lu_solve(m.matrix().as_matrix(), pair.y())?;
        recon.push(norm(&sub(&x, pair.g())) / norm(pair.g()));
        trace.push(k as f64 * config.dt, loss, pair, spectrum);
        states.push(theta.clone());
        if k < steps {
            theta = rk4(&a, &theta, config.dt);
        }
    }
    if trace.len() <= config.window_m {
        return Err(ExperimentError::Config(format!(
            "run produced {} steps, not enough for window {}",
            trace.len(),
            config.window_m
        )));
    }
    let trace = trace.finish(config.window_m, truncated)?;
    Ok(LtiRun {
        a,
        p,
        lyapunov_residual: lyap,
        states,
        reconstruction_residuals: recon,
        trace,
    })
}
