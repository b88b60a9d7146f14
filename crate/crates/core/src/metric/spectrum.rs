use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{MetricError, UpdateGradientPair};

/// Spectrum of a one-parameter-family metric in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub lambda_max: f64,
    pub lambda_min: f64,
    /// Eigenvalue of multiplicity `D − 2`; absent for `D < 3`.
    pub lambda_bulk: Option<f64>,
    pub kappa: f64,
    pub psi: f64,
    pub norm_ratio: f64,
}

impl SpectrumReport {
    /// All `D` eigenvalues in ascending order.
    pub fn eigenvalues(&self, dim: usize) -> Vec<f64> {
        match dim {
            1 => vec![self.lambda_min],
            _ => {
                let mut v = Vec::with_capacity(dim);
                v.push(self.lambda_min);
                if let Some(b) = self.lambda_bulk {
                    v.extend(std::iter::repeat_n(b, dim - 2));
                }
                v.push(self.lambda_max);
                v.sort_by(f64::total_cmp);
                v
            }
        }
    }

    pub fn satisfies_invariants(&self) -> bool {
        let ordered = match self.lambda_bulk {
            Some(b) => self.lambda_max >= b && b >= self.lambda_min,
            None => self.lambda_max >= self.lambda_min,
        };
        ordered && self.lambda_min > 0.0 && self.kappa >= 1.0 && self.kappa == self.lambda_max / self.lambda_min
    }
}

/// Eigenvalues of `M_γ` from the pair alone.
///
/// With `r = ‖y‖/‖g‖` and `c = cos ψ`:
/// `λ_max/min = r/(2c) · ((1+γ) ± √((1+γ)² − 4γc²))`, and `λ_bulk = rγ/c`.
/// The discriminant is evaluated as `(1−γ)² + 4γ sin²ψ` and `λ_min` through
/// `λ_max λ_min = r²γ`, which avoids cancellation.
pub fn closed_form_spectrum(pair: &UpdateGradientPair, gamma: f64) -> Result<SpectrumReport, MetricError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(MetricError::InvalidGamma(gamma));
    }
    pair.require_aligned()?;
    let r = pair.norm_ratio();
    let (s, c) = pair.sin_cos();
    let psi = s.atan2(c);
    let dim = pair.dim();
    if dim == 1 {
        return Ok(SpectrumReport {
            lambda_max: r,
            lambda_min: r,
            lambda_bulk: None,
            kappa: 1.0,
            psi,
            norm_ratio: r,
        });
    }
    let disc = (1.0 - gamma).powi(2) + 4.0 * gamma * s * s;
    // λ_max = r q and λ_min = r γ / q keep r out of any square.
    let q = ((1.0 + gamma) + disc.sqrt()) / (2.0 * c);
    let lambda_max = r * q;
    let lambda_min = r * (gamma / q);
    let lambda_bulk = (dim >= 3).then(|| r * gamma / c);
    let kappa = lambda_max / lambda_min;
    if !(kappa.is_finite() && lambda_min > 0.0) {
        return Err(MetricError::Certificate {
            certificate: "finite condition number λ_max/λ_min",
            value: kappa,
            bound: f64::MAX,
        });
    }
    Ok(SpectrumReport {
        lambda_max,
        lambda_min,
        lambda_bulk,
        kappa,
        psi,
        norm_ratio: r,
    })
}

/// `κ(M_opt) = (1 + |sin ψ|) / (1 − |sin ψ|)`.
pub fn condition_number_bound(psi: f64) -> Result<f64, MetricError> {
    if !(psi.abs() < FRAC_PI_2) {
        return Err(MetricError::InvalidAngle(psi));
    }
    let s = psi.sin().abs();
    Ok((1.0 + s) / (1.0 - s))
}

/// Strict, unattained limits on the extreme eigenvalues of any valid metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueBounds {
    /// Every valid metric has `λ_min < (‖y‖/‖g‖) cos ψ` (for ψ ≠ 0).
    pub sup_lambda_min: f64,
    /// Every valid metric has `λ_max > ‖y‖ / (‖g‖ cos ψ)` (for ψ ≠ 0).
    pub inf_lambda_max: f64,
}

pub fn extreme_eigenvalue_bounds(pair: &UpdateGradientPair) -> Result<EigenvalueBounds, MetricError> {
    pair.require_aligned()?;
    let r = pair.norm_ratio();
    let (_, c) = pair.sin_cos();
    Ok(EigenvalueBounds {
        sup_lambda_min: r * c,
        inf_lambda_max: r / c,
    })
}
