use serde::{Deserialize, Serialize};

use super::{discrete_gradient, DiscreteError, DiscreteGradientResult, DiscreteStep, LossOracle, UpdateRule};
use crate::linalg::vector::{dot, norm, sub};
use crate::linalg::{lu_solve, sym_eigen, SymMatrix};
use crate::metric::{build_canonical_metric, Metric, MetricError, UpdateGradientPair};

/// `M̄ = ȳȳᵀ/(ȳᵀg) + Σ uᵢuᵢᵀ` with `uᵢ` an orthonormal basis of `g⊥`, so that
/// `M̄ g = ȳ`.
pub fn build_discrete_metric(step: &DiscreteStep, y_bar: &[f64]) -> Result<Metric, DiscreteError> {
    let pair = UpdateGradientPair::new(step.g().to_vec(), y_bar.to_vec())?;
    Ok(build_canonical_metric(&pair, None)?)
}

/// Relative error of `θ_t − η M̄⁻¹ ∇̄L` against `θ_{t+1}`.
pub fn discrete_step_reconstruction(step: &DiscreteStep, m_bar: &Metric) -> Result<f64, DiscreteError> {
    // ∇̄L = −ȳ
    let x = lu_solve(m_bar.matrix().as_matrix(), m_bar.pair().y())?;
    let rebuilt: Vec<f64> = step
        .theta_t()
        .iter()
        .zip(&x)
        .map(|(t, xi)| t + step.eta() * xi)
        .collect();
    Ok(norm(&sub(&rebuilt, step.theta_next())) / norm(step.theta_next()).max(1.0))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombinedMetric {
    /// `M̄ + ηH`
    pub matrix: SymMatrix,
    pub is_pd: bool,
    pub min_eigenvalue: f64,
    /// When positive definite: `‖[M̄ + ηH]⁻¹(ȳ + ηHg) − g‖ / ‖g‖`, i.e. how
    /// well `g = −[M̄ + ηH]⁻¹ ∇L(θ_t)` is reproduced.
    pub reconstruction_residual: Option<f64>,
}

/// `M̄ + ηH`. A non positive definite result is reported, not an error.
pub fn combined_metric(m_bar: &Metric, hessian_mid: &SymMatrix, eta: f64) -> Result<CombinedMetric, DiscreteError> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(DiscreteError::InvalidEta(eta));
    }
    if hessian_mid.dim() != m_bar.dim() {
        return Err(DiscreteError::DimensionMismatch {
            expected: m_bar.dim(),
            found: hessian_mid.dim(),
        });
    }
    let matrix = m_bar.matrix().add(&hessian_mid.scaled(eta));
    let min_eigenvalue = sym_eigen(&matrix)?.min();
    let is_pd = min_eigenvalue > 0.0;
    let reconstruction_residual = if is_pd {
        let g = m_bar.pair().g();
        let hg = hessian_mid.mul_vec(g);
        let neg_grad: Vec<f64> = m_bar.pair().y().iter().zip(&hg).map(|(y, h)| y + eta * h).collect();
        let x = lu_solve(matrix.as_matrix(), &neg_grad)?;
        Some(norm(&sub(&x, g)) / norm(g))
    } else {
        None
    };
    Ok(CombinedMetric {
        matrix,
        is_pd,
        min_eigenvalue,
        reconstruction_residual,
    })
}

/// Relative error of `(θ_{t+1} − θ_t)/η = −[M̄ + ηH]⁻¹ ∇L(θ_t)` against a
/// gradient supplied by the caller.
pub fn natural_gradient_step_residual(
    combined: &CombinedMetric,
    step: &DiscreteStep,
    gradient: &[f64],
) -> Result<f64, DiscreteError> {
    let neg: Vec<f64> = gradient.iter().map(|v| -v).collect();
    let x = lu_solve(combined.matrix.as_matrix(), &neg)?;
    let observed: Vec<f64> = step
        .theta_next()
        .iter()
        .zip(step.theta_t())
        .map(|(a, b)| (a - b) / step.eta())
        .collect();
    Ok(norm(&sub(&x, &observed)) / norm(&observed))
}

/// Learning-rate bound `(1/h)(‖ȳ‖/‖g‖) cos ψ̄ = ȳᵀg / (h ‖g‖²)`.
///
/// `(‖ȳ‖/‖g‖) cos ψ̄` is the supremum of `λ_min` over all metrics mapping
/// `g` to `ȳ` and is never attained; see [`learning_rate_bounds`] for the
/// certified version tied to the metric actually built.
pub fn max_learning_rate(y_bar: &[f64], g: &[f64], h: f64) -> Result<f64, DiscreteError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(DiscreteError::InvalidConfig(format!("h must be positive, got {h}")));
    }
    let pair = UpdateGradientPair::new(g.to_vec(), y_bar.to_vec())?;
    pair.require_aligned()?;
    Ok(pair.alignment() / (h * dot(g, g)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRateBound {
    /// `(1/h)(‖ȳ‖/‖g‖) cos ψ̄`
    pub formula: f64,
    /// `λ_min(M̄)/h`; below this `M̄ + ηH` is positive definite by Weyl's inequality.
    pub certified: f64,
    pub h: f64,
}

/// `h = max(0, −λ_min(H))`
pub fn hessian_negativity(hessian_mid: &SymMatrix) -> Result<f64, DiscreteError> {
    Ok((-sym_eigen(hessian_mid)?.min()).max(0.0))
}

/// Both learning-rate bounds for a built `M̄`. With `h = 0` (locally convex)
/// both are infinite.
pub fn learning_rate_bounds(m_bar: &Metric, hessian_mid: &SymMatrix) -> Result<LearningRateBound, DiscreteError> {
    let h = hessian_negativity(hessian_mid)?;
    if h == 0.0 {
        return Ok(LearningRateBound {
            formula: f64::INFINITY,
            certified: f64::INFINITY,
            h,
        });
    }
    let pair = m_bar.pair();
    Ok(LearningRateBound {
        formula: max_learning_rate(pair.y(), pair.g(), h)?,
        certified: m_bar.certificates().min_eigenvalue / h,
        h,
    })
}

/// A discrete step whose learning rate sits at a fixed fraction of its own
/// certified bound, together with everything derived from it.
#[derive(Debug, Clone)]
pub struct CertifiedStep {
    pub step: DiscreteStep,
    pub gradient: DiscreteGradientResult,
    pub m_bar: Metric,
    pub bound: LearningRateBound,
    pub combined: CombinedMetric,
    pub iterations: usize,
}

/// One trial step: `None` when it is not effective (or `ȳ` is not aligned
/// with `g`), otherwise the step and its certified bound.
fn trial(
    oracle: &dyn LossOracle,
    theta: &[f64],
    g: &[f64],
    eta: f64,
) -> Result<Option<(DiscreteStep, DiscreteGradientResult, Metric, LearningRateBound)>, DiscreteError> {
    let step = DiscreteStep::new(theta.to_vec(), g.to_vec(), eta)?;
    let gradient = match discrete_gradient(oracle, &step) {
        Ok(r) => r,
        Err(DiscreteError::Effectiveness { .. }) | Err(DiscreteError::Metric(MetricError::Alignment { .. })) => {
            return Ok(None)
        }
        Err(e) => return Err(e),
    };
    let m_bar = build_discrete_metric(&step, &gradient.y_bar)?;
    let bound = learning_rate_bounds(&m_bar, &gradient.hessian_mid)?;
    Ok(Some((step, gradient, m_bar, bound)))
}

/// The certified bound depends on η through `ȳ`, `M̄` and `H`, so the step
/// size solves `η = fraction · certified(η)`. Starting from `eta0` the root
/// is bracketed by doubling or halving, then bisected in log η. The returned
/// η is the lower end of the final bracket, so `η ≤ fraction · certified(η)`
/// holds exactly. A locally convex trial step (`h = 0`) is certified for any
/// η and is returned as is.
pub fn certified_step(
    oracle: &dyn LossOracle,
    rule: &dyn UpdateRule,
    theta: &[f64],
    eta0: f64,
    fraction: f64,
) -> Result<CertifiedStep, DiscreteError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DiscreteError::InvalidConfig(format!(
            "fraction must lie in (0, 1), got {fraction}"
        )));
    }
    if !(eta0 > 0.0 && eta0.is_finite()) {
        return Err(DiscreteError::InvalidEta(eta0));
    }
    let g = rule.direction(oracle, theta);
    let count = std::cell::Cell::new(0usize);
    let eval = |eta: f64| -> Result<_, DiscreteError> {
        count.set(count.get() + 1);
        let t = trial(oracle, theta, &g, eta)?;
        let below = t.as_ref().is_some_and(|(_, _, _, b)| eta <= fraction * b.certified);
        Ok((t, below))
    };

    let (mut lo, mut hi);
    let mut lo_trial;
    let (t, below) = eval(eta0)?;
    if below {
        if t.as_ref().is_some_and(|(_, _, _, b)| b.certified.is_infinite()) {
            lo_trial = t;
            return finish(lo_trial, count.get());
        }
        lo = eta0;
        lo_trial = t;
        hi = eta0;
        loop {
            hi *= 2.0;
            let (t, below) = eval(hi)?;
            if !below {
                break;
            }
            let trivially = t.as_ref().is_some_and(|(_, _, _, b)| b.certified.is_infinite());
            lo = hi;
            lo_trial = t;
            if trivially || count.get() > 200 {
                return finish(lo_trial, count.get());
            }
        }
    } else {
        hi = eta0;
        lo = eta0;
        loop {
            lo *= 0.5;
            if lo < 1e-300 || count.get() > 2000 {
                return Err(DiscreteError::InvalidConfig(
                    "no certified step size found below eta0".into(),
                ));
            }
            let (t, below) = eval(lo)?;
            if below {
                lo_trial = t;
                break;
            }
        }
    }
    while hi / lo - 1.0 > 1e-10 {
        let mid = (lo * hi).sqrt();
        let (t, below) = eval(mid)?;
        if below {
            lo = mid;
            lo_trial = t;
        } else {
            hi = mid;
        }
    }
    finish(lo_trial, count.get())
}

fn finish(
    t: Option<(DiscreteStep, DiscreteGradientResult, Metric, LearningRateBound)>,
    iterations: usize,
) -> Result<CertifiedStep, DiscreteError> {
    let (step, gradient, m_bar, bound) = t.expect("bracket ends are effective trial steps");
    let combined = combined_metric(&m_bar, &gradient.hessian_mid, step.eta())?;
    Ok(CertifiedStep {
        step,
        gradient,
        m_bar,
        bound,
        combined,
        iterations,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRow {
    pub eta: f64,
    pub effective: bool,
    /// `‖ȳ − y‖`
    pub y_bar_error: f64,
    /// `‖ηHg‖`
    pub eta_hg_norm: f64,
    /// `‖M̄ − M‖_max` against the canonical metric of `(g, y)`.
    pub metric_gap: f64,
    /// Ascending eigenvalues of `M̄`.
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuumProbe {
    pub rows: Vec<ProbeRow>,
    /// `‖M‖_max` of the continuous-time canonical metric.
    pub metric_scale: f64,
    /// Least-squares slope of `log ‖ȳ − y‖` against `log η` over effective rows.
    pub slope: Option<f64>,
}

/// Shrinks η and tracks `ȳ → y`, `ηHg → 0` and `M̄ → M`.
pub fn continuum_limit_probe(
    oracle: &dyn LossOracle,
    theta: &[f64],
    rule: &dyn UpdateRule,
    etas: &[f64],
) -> Result<ContinuumProbe, DiscreteError> {
    let g = rule.direction(oracle, theta);
    let y: Vec<f64> = oracle.gradient(theta).iter().map(|v| -v).collect();
    let m_cont = build_canonical_metric(&UpdateGradientPair::new(g.clone(), y.clone())?, None)?;
    let mut rows = Vec::with_capacity(etas.len());
    for &eta in etas {
        let step = DiscreteStep::new(theta.to_vec(), g.clone(), eta)?;
        let r = match discrete_gradient(oracle, &step) {
            Ok(r) => r,
            Err(DiscreteError::Effectiveness { .. }) | Err(DiscreteError::Metric(MetricError::Alignment { .. })) => {
                rows.push(ProbeRow {
                    eta,
                    effective: false,
                    y_bar_error: f64::NAN,
                    eta_hg_norm: f64::NAN,
                    metric_gap: f64::NAN,
                    spectrum: Vec::new(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let m_bar = build_discrete_metric(&step, &r.y_bar)?;
        let hg = r.hessian_mid.mul_vec(&g);
        rows.push(ProbeRow {
            eta,
            effective: true,
            y_bar_error: norm(&sub(&r.y_bar, &y)),
            eta_hg_norm: eta * norm(&hg),
            metric_gap: m_bar.matrix().sub(m_cont.matrix()).max_abs(),
            spectrum: m_bar.eigen().eigenvalues,
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.effective && r.y_bar_error > 0.0)
        .map(|r| (r.eta.ln(), r.y_bar_error.ln()))
        .collect();
    let slope = least_squares_slope(&pts);
    Ok(ContinuumProbe {
        rows,
        metric_scale: m_cont.matrix().max_abs(),
        slope,
    })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{DoubleWell, GradientDescent, Quadratic, Quartic, Rosenbrock};
    use crate::linalg::Matrix;
    use crate::tolerance;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parallel_discrete_metric() {
        let step = DiscreteStep::new(vec![0.0, 0.0], vec![2.0, 0.0], 0.5).unwrap();
        let m = build_discrete_metric(&step, &[3.0, 0.0]).unwrap();
        // ‖ȳ‖/‖g‖ on span(g), identity on g⊥
        let expect = Matrix::diagonal(&[1.5, 1.0]);
        assert!(m.matrix().as_matrix().sub(&expect).max_abs() <= 1e-15);
    }

    #[test]
    fn quadratic_step_reconstructs() {
        let o = Quadratic {
            a: SymMatrix::diagonal(&[1.0, 3.0]),
        };
        let step = DiscreteStep::new(vec![1.0, -0.5], vec![-1.0, 1.5], 0.1).unwrap();
        let r = discrete_gradient(&o, &step).unwrap();
        let m = build_discrete_metric(&step, &r.y_bar).unwrap();
        assert!(m.certificates().map_residual <= 1e-10);
        assert!(discrete_step_reconstruction(&step, &m).unwrap() <= 1e-9);
        let c = combined_metric(&m, &r.hessian_mid, step.eta()).unwrap();
        assert!(c.is_pd);
        assert!(c.reconstruction_residual.unwrap() <= tolerance::COMBINED_RECONSTRUCTION);
        assert!(natural_gradient_step_residual(&c, &step, &r.gradient).unwrap() <= tolerance::COMBINED_RECONSTRUCTION);
    }

    #[test]
    fn combined_metric_states() {
        let pair = UpdateGradientPair::new(vec![1.0, 0.0], vec![1.0, 0.0]).unwrap();
        let m = build_canonical_metric(&pair, None).unwrap();
        let h = SymMatrix::diagonal(&[-1.0, 1.0]);
        let c = combined_metric(&m, &h, 2.0).unwrap();
        assert!(!c.is_pd);
        assert_abs_diff_eq!(c.min_eigenvalue, -1.0, epsilon = 1e-15);
        assert!(c.reconstruction_residual.is_none());
        let c0 = combined_metric(&m, &h, 0.0).unwrap();
        assert!(c0.is_pd);
        assert_eq!(&c0.matrix, m.matrix());
        assert!(combined_metric(&m, &h, -1.0).is_err());
    }

    #[test]
    fn learning_rate_bound_values() {
        assert_abs_diff_eq!(
            max_learning_rate(&[1.0, 0.0], &[1.0, 0.0], 2.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        // below the bound the combined matrix stays positive definite
        let pair = UpdateGradientPair::new(vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]).unwrap();
        let m = build_canonical_metric(&pair, None).unwrap();
        let h = SymMatrix::diagonal(&[-2.0, -2.0, 0.5]);
        assert!(combined_metric(&m, &h, 0.49).unwrap().min_eigenvalue > 0.0);
        // degenerate cases
        let near_orth = max_learning_rate(&[1e-9, 1.0], &[1.0, 0.0], 1.0).unwrap();
        assert!(near_orth < 1e-8);
        assert!(max_learning_rate(&[1.0, 0.0], &[1.0, 0.0], 1e-12).unwrap() > 1e11);
        assert!(max_learning_rate(&[1.0, 0.0], &[1.0, 0.0], 0.0).is_err());
        assert!(max_learning_rate(&[0.0, 1.0], &[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn quadratic_probe_is_exactly_linear() {
        let o = Quadratic {
            a: SymMatrix::diagonal(&[1.0, 4.0]),
        };
        let theta = [1.0, 1.0];
        let probe = continuum_limit_probe(&o, &theta, &GradientDescent, &[1e-1, 1e-2, 1e-3]).unwrap();
        let g = [-1.0, -4.0];
        let hg_norm = norm(&[0.5 * g[0], 2.0 * g[1]]);
        for row in &probe.rows {
            assert!(row.effective);
            assert_abs_diff_eq!(row.y_bar_error, row.eta * hg_norm, epsilon = 1e-12);
            assert_abs_diff_eq!(row.y_bar_error, row.eta_hg_norm, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(probe.slope.unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn quartic_probe_converges() {
        let o = Quartic { dim: 3 };
        let theta = [0.8, -0.5, 0.3];
        let etas: Vec<f64> = (1..=5).map(|k| 10f64.powi(-k)).collect();
        let probe = continuum_limit_probe(&o, &theta, &GradientDescent, &etas).unwrap();
        let slope = probe.slope.unwrap();
        assert!((0.9..=1.1).contains(&slope), "slope {slope}");
        let last = probe.rows.last().unwrap();
        assert!(last.metric_gap <= 1e-4 * probe.metric_scale);
    }

    #[test]
    fn slope_needs_two_points() {
        assert!(least_squares_slope(&[(0.0, 1.0)]).is_none());
        assert_abs_diff_eq!(least_squares_slope(&[(0.0, 1.0), (1.0, 3.0)]).unwrap(), 2.0);
    }

    #[test]
    fn certified_step_sits_at_the_requested_fraction() {
        let cases: [(Box<dyn LossOracle>, Vec<f64>); 2] = [
            (Box::new(DoubleWell { dim: 2, coupling: 0.3 }), vec![0.1, 0.1]),
            (Box::new(Rosenbrock { dim: 2 }), vec![0.5, 0.5]),
        ];
        for (oracle, theta) in cases {
            let c = certified_step(oracle.as_ref(), &GradientDescent, &theta, 0.5, 0.9).unwrap();
            assert!(c.bound.h > 0.0, "{}", oracle.name());
            let ratio = c.step.eta() / c.bound.certified;
            assert!(
                ratio <= 0.9 && ratio > 0.9 * (1.0 - 1e-8),
                "{}: ratio {ratio}",
                oracle.name()
            );
            assert!(c.combined.is_pd);
        }
    }

    #[test]
    fn certified_step_rejects_bad_inputs() {
        let o = Quadratic {
            a: SymMatrix::diagonal(&[1.0, 1.0]),
        };
        assert!(certified_step(&o, &GradientDescent, &[1.0, 0.0], 0.1, 1.0).is_err());
        assert!(certified_step(&o, &GradientDescent, &[1.0, 0.0], -0.1, 0.5).is_err());
    }
}
