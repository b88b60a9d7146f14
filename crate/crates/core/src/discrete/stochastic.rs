use serde::{Deserialize, Serialize};

use super::{hessian_discrete_gradient, DiscreteError, LossOracle};
use crate::linalg::vector::{compensated_mean, dot, norm, sub};
use crate::linalg::{lu_solve, sym_eigen, SymMatrix};
use crate::metric::{build_canonical_metric, MetricError, UpdateGradientPair};
use crate::tolerance;

/// One draw of a stochastic rule at a fixed `θ_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticSample {
    pub g: Vec<f64>,
    pub y_bar: Vec<f64>,
    /// `H g` with `H = ½ ∇²L(θ_t + λ η g)` for this draw.
    pub hg: Vec<f64>,
}

/// Discrete-gradient sample for one drawn update. The draw need not decrease
/// the loss on its own.
pub fn stochastic_sample(
    oracle: &dyn LossOracle,
    theta: &[f64],
    g: Vec<f64>,
    eta: f64,
) -> Result<StochasticSample, DiscreteError> {
    let r = hessian_discrete_gradient(oracle, theta, &g, eta)?;
    let hg = r.hessian_mid.mul_vec(&g);
    Ok(StochasticSample { g, y_bar: r.y_bar, hg })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StochasticMetric {
    pub matrix: SymMatrix,
    pub is_pd: bool,
    pub min_eigenvalue: f64,
    pub used_correction: bool,
    pub mean_g: Vec<f64>,
    pub mean_y_bar: Vec<f64>,
    pub mean_hg: Vec<f64>,
    /// `∇L(θ_t) = −(⟨ȳ⟩ + η⟨Hg⟩)`
    pub implied_gradient: Vec<f64>,
    /// When positive definite: `‖−M⁻¹∇L − ⟨g⟩‖ / ‖⟨g⟩‖`.
    pub reconstruction_residual: Option<f64>,
}

impl StochasticMetric {
    /// `‖−M⁻¹ grad − ⟨g⟩‖ / ‖⟨g⟩‖` for a gradient supplied by the caller.
    pub fn reconstruction_against(&self, gradient: &[f64]) -> Result<f64, DiscreteError> {
        let neg: Vec<f64> = gradient.iter().map(|v| -v).collect();
        let x = lu_solve(self.matrix.as_matrix(), &neg)?;
        Ok(norm(&sub(&x, &self.mean_g)) / norm(&self.mean_g))
    }
}

/// Metric for the averaged update of a stochastic rule.
///
/// `M̄ = ⟨ȳ⟩⟨ȳ⟩ᵀ/(⟨g⟩ᵀ⟨ȳ⟩) + Σ uᵢuᵢᵀ` over `⟨g⟩⊥`, plus the rank-one
/// correction `η⟨Hg⟩⟨Hg⟩ᵀ/(⟨Hg⟩ᵀ⟨g⟩)` when `⟨Hg⟩` is not orthogonal to
/// `⟨g⟩`. The result satisfies `⟨g⟩ = −M⁻¹∇L(θ_t)`. Averages use
/// compensated summation so they do not depend on sample batching.
pub fn stochastic_average_metric(samples: &[StochasticSample], eta: f64) -> Result<StochasticMetric, DiscreteError> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(DiscreteError::InvalidEta(eta));
    }
    let first = samples
        .first()
        .ok_or_else(|| DiscreteError::InvalidConfig("no stochastic samples".into()))?;
    let dim = first.g.len();
    for s in samples {
        for v in [&s.g, &s.y_bar, &s.hg] {
            if v.len() != dim {
                return Err(DiscreteError::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
        }
    }
    let mean_g = compensated_mean(samples.iter().map(|s| s.g.as_slice()), dim);
    let mean_y_bar = compensated_mean(samples.iter().map(|s| s.y_bar.as_slice()), dim);
    let mean_hg = compensated_mean(samples.iter().map(|s| s.hg.as_slice()), dim);

    let pair = UpdateGradientPair::new(mean_g.clone(), mean_y_bar.clone()).map_err(|e| match e {
        MetricError::InvalidPair(msg) => DiscreteError::InvalidConfig(format!("averaged pair: {msg}")),
        other => other.into(),
    })?;
    let m_bar = build_canonical_metric(&pair, None)?;

    let hg_dot_g = dot(&mean_hg, &mean_g);
    let used_correction = hg_dot_g.abs() > tolerance::STOCHASTIC_CORRECTION * norm(&mean_hg) * norm(&mean_g);
    let matrix = if used_correction {
        m_bar.matrix().add_outer(eta / hg_dot_g, &mean_hg)
    } else {
        m_bar.matrix().clone()
    };
    let min_eigenvalue = sym_eigen(&matrix)?.min();
    let is_pd = min_eigenvalue > 0.0;

    let implied_gradient: Vec<f64> = mean_y_bar.iter().zip(&mean_hg).map(|(y, h)| -(y + eta * h)).collect();
    let mut out = StochasticMetric {
        matrix,
        is_pd,
        min_eigenvalue,
        used_correction,
        mean_g,
        mean_y_bar,
        mean_hg,
        implied_gradient,
        reconstruction_residual: None,
    };
    if is_pd {
        out.reconstruction_residual = Some(out.reconstruction_against(&out.implied_gradient.clone())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{build_discrete_metric, discrete_gradient, DiscreteStep, Quadratic};

    #[test]
    fn single_sample_matches_deterministic_construction() {
        let o = Quadratic {
            a: SymMatrix::diagonal(&[1.0, 2.0, 3.0]),
        };
        let theta = [1.0, -1.0, 0.5];
        let g = vec![-1.0, 2.0, -1.5];
        let eta = 0.05;
        let s = stochastic_sample(&o, &theta, g.clone(), eta).unwrap();
        let m = stochastic_average_metric(std::slice::from_ref(&s), eta).unwrap();

        let step = DiscreteStep::new(theta.to_vec(), g, eta).unwrap();
        let r = discrete_gradient(&o, &step).unwrap();
        let m_bar = build_discrete_metric(&step, &r.y_bar).unwrap();
        let expected = m_bar.matrix().add_outer(eta / dot(&s.hg, &s.g), &s.hg);
        assert!(m.used_correction);
        assert!(m.matrix.sub(&expected).max_abs() <= 1e-14);
        assert!(m.is_pd);
        assert!(m.reconstruction_residual.unwrap() <= 1e-10);
        assert!(m.reconstruction_against(&o.a.mul_vec(&theta)).unwrap() <= 1e-10);
    }

    #[test]
    fn orthogonal_curvature_skips_correction() {
        let s = StochasticSample {
            g: vec![1.0, 0.0],
            y_bar: vec![1.0, 0.5],
            hg: vec![0.0, 2.0],
        };
        let m = stochastic_average_metric(&[s], 0.1).unwrap();
        assert!(!m.used_correction);
        assert!(m.is_pd);
    }

    #[test]
    fn misaligned_average_refused() {
        let a = StochasticSample {
            g: vec![1.0, 0.0],
            y_bar: vec![-1.0, 0.0],
            hg: vec![0.0, 0.0],
        };
        let b = StochasticSample {
            g: vec![1.0, 0.0],
            y_bar: vec![0.5, 0.0],
            hg: vec![0.0, 0.0],
        };
        assert!(matches!(
            stochastic_average_metric(&[a, b], 0.1),
            Err(DiscreteError::Metric(MetricError::Alignment { .. }))
        ));
        assert!(stochastic_average_metric(&[], 0.1).is_err());
    }
}
