use serde::{Deserialize, Serialize};

use super::{DiscreteError, LossOracle};
use crate::linalg::angle_between;
use crate::linalg::vector::{dot, norm};
use crate::linalg::SymMatrix;
use crate::tolerance;

const SCAN_POINTS: usize = 64;
const BISECTION_STEPS: usize = 60;

/// One discrete update `θ_{t+1} = θ_t + η g`.
///
/// `theta_next` is always computed from `(theta_t, eta, g)`, so the update
/// identity holds bitwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteStep {
    theta_t: Vec<f64>,
    theta_next: Vec<f64>,
    eta: f64,
    g: Vec<f64>,
}

impl DiscreteStep {
    pub fn new(theta_t: Vec<f64>, g: Vec<f64>, eta: f64) -> Result<Self, DiscreteError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(DiscreteError::InvalidEta(eta));
        }
        if theta_t.len() != g.len() {
            return Err(DiscreteError::DimensionMismatch {
                expected: theta_t.len(),
                found: g.len(),
            });
        }
        let theta_next = theta_t.iter().zip(&g).map(|(t, gi)| t + eta * gi).collect();
        Ok(Self {
            theta_t,
            theta_next,
            eta,
            g,
        })
    }

    /// Derives `g = (θ_next − θ_t)/η`; `theta_next` is then recomputed from it
    /// and may differ from the argument in the last bit.
    pub fn from_endpoints(theta_t: Vec<f64>, theta_next: &[f64], eta: f64) -> Result<Self, DiscreteError> {
        if theta_t.len() != theta_next.len() {
            return Err(DiscreteError::DimensionMismatch {
                expected: theta_t.len(),
                found: theta_next.len(),
            });
        }
        let g = theta_t.iter().zip(theta_next).map(|(a, b)| (b - a) / eta).collect();
        Self::new(theta_t, g, eta)
    }

    pub fn theta_t(&self) -> &[f64] {
        &self.theta_t
    }

    pub fn theta_next(&self) -> &[f64] {
        &self.theta_next
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    /// `p = η g`
    pub fn displacement(&self) -> Vec<f64> {
        self.g.iter().map(|v| self.eta * v).collect()
    }
}

/// Hessian-based discrete gradient at one step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteGradientResult {
    /// `ȳ = −∇̄L(θ_t, θ_{t+1}) = −∇L(θ_t) − η H g`
    pub y_bar: Vec<f64>,
    pub lambda_taylor: f64,
    /// `H = ½ ∇²L(θ_t + λ η g)`
    pub hessian_mid: SymMatrix,
    /// Angle between `ȳ` and `g`.
    pub psi_bar: f64,
    /// `∇L(θ_t)`
    pub gradient: Vec<f64>,
    pub loss_before: f64,
    pub loss_after: f64,
    /// `|L(θ+p) − L(θ) − pᵀ∇L(θ) − ½ pᵀ∇²L(θ+λp) p|`
    pub taylor_residual: f64,
    /// `|pᵀ∇̄L − (L(θ+p) − L(θ))|`
    pub defining_residual: f64,
}

/// Residual of the exact second-order Taylor identity along `p`.
struct TaylorResidual<'a> {
    oracle: &'a dyn LossOracle,
    theta: &'a [f64],
    p: &'a [f64],
    /// `L(θ+p) − L(θ) − pᵀ∇L(θ)`
    base: f64,
}

impl TaylorResidual<'_> {
    fn at(&self, lambda: f64) -> f64 {
        let mid: Vec<f64> = self.theta.iter().zip(self.p).map(|(t, p)| t + lambda * p).collect();
        let hp = self.oracle.hessian(&mid).mul_vec(self.p);
        self.base - 0.5 * dot(self.p, &hp)
    }
}

/// Finds `λ ∈ (0, 1)` with `L(θ+p) = L(θ) + pᵀ∇L(θ) + ½ pᵀ∇²L(θ+λp) p`.
///
/// The residual is scanned on 64 interior points of a uniform grid (plus the
/// endpoints as brackets). A residual within tolerance everywhere, as for
/// any quadratic, returns 0.5. Otherwise the first sign change is bisected.
pub fn taylor_lambda(oracle: &dyn LossOracle, theta: &[f64], p: &[f64]) -> Result<f64, DiscreteError> {
    check_dims(oracle, theta)?;
    check_dims(oracle, p)?;
    if norm(p) == 0.0 {
        return Err(DiscreteError::InvalidConfig(
            "taylor_lambda needs a non-zero displacement".into(),
        ));
    }
    let l0 = oracle.value(theta);
    let moved: Vec<f64> = theta.iter().zip(p).map(|(t, p)| t + p).collect();
    let l1 = oracle.value(&moved);
    let base = l1 - l0 - dot(p, &oracle.gradient(theta));
    let residual = TaylorResidual { oracle, theta, p, base };
    let tol = tolerance::TAYLOR_RESIDUAL * l0.abs().max(1.0);

    let grid: Vec<f64> = (0..=SCAN_POINTS + 1)
        .map(|k| k as f64 / (SCAN_POINTS + 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&l| residual.at(l)).collect();

    if values[1..=SCAN_POINTS].iter().all(|r| r.abs() <= tol) {
        return Ok(0.5);
    }
    for k in 0..grid.len() - 1 {
        let (ra, rb) = (values[k], values[k + 1]);
        if k > 0 && ra == 0.0 {
            return Ok(grid[k]);
        }
        if ra.signum() != rb.signum() && ra != 0.0 && rb != 0.0 {
            let (mut lo, mut hi, mut rlo) = (grid[k], grid[k + 1], ra);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                let rm = residual.at(mid);
                if rm == 0.0 {
                    return Ok(mid);
                }
                if rm.signum() == rlo.signum() {
                    lo = mid;
                    rlo = rm;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
    }
    let (best, rbest) = (1..=SCAN_POINTS)
        .map(|k| (grid[k], values[k]))
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("non-empty scan");
    if rbest.abs() <= tol {
        return Ok(best);
    }
    Err(DiscreteError::NoRoot {
        profile: grid.into_iter().zip(values).collect(),
    })
}

/// `∇̄L(θ, θ+p) = ∇L(θ) + ½ ∇²L(θ + λp) p`, without requiring a loss decrease.
pub fn hessian_discrete_gradient(
    oracle: &dyn LossOracle,
    theta: &[f64],
    g: &[f64],
    eta: f64,
) -> Result<DiscreteGradientResult, DiscreteError> {
    let step = DiscreteStep::new(theta.to_vec(), g.to_vec(), eta)?;
    evaluate(oracle, &step)
}

fn evaluate(oracle: &dyn LossOracle, step: &DiscreteStep) -> Result<DiscreteGradientResult, DiscreteError> {
    check_dims(oracle, step.theta_t())?;
    let theta = step.theta_t();
    let p = step.displacement();
    let lambda = taylor_lambda(oracle, theta, &p)?;
    let mid: Vec<f64> = theta.iter().zip(&p).map(|(t, p)| t + lambda * p).collect();
    let hessian_mid = oracle.hessian(&mid).scaled(0.5);
    let gradient = oracle.gradient(theta);
    let hp = hessian_mid.mul_vec(&p);
    let y_bar: Vec<f64> = gradient.iter().zip(&hp).map(|(gr, h)| -gr - h).collect();

    let loss_before = oracle.value(theta);
    let loss_after = oracle.value(step.theta_next());
    let delta = loss_after - loss_before;
    let taylor_residual = (delta - dot(&p, &gradient) - dot(&p, &hp)).abs();
    let tol = tolerance::TAYLOR_RESIDUAL * loss_before.abs().max(1.0);
    if !(taylor_residual <= tol) {
        return Err(DiscreteError::TaylorResidual {
            residual: taylor_residual,
            bound: tol,
        });
    }
    let defining_residual = (-dot(&p, &y_bar) - delta).abs();
    let psi_bar = angle_between(&y_bar, step.g()).unwrap_or(f64::NAN);
    Ok(DiscreteGradientResult {
        y_bar,
        lambda_taylor: lambda,
        hessian_mid,
        psi_bar,
        gradient,
        loss_before,
        loss_after,
        taylor_residual,
        defining_residual,
    })
}

/// Discrete gradient of an effective step; refuses steps that do not
/// decrease the loss.
pub fn discrete_gradient(
    oracle: &dyn LossOracle,
    step: &DiscreteStep,
) -> Result<DiscreteGradientResult, DiscreteError> {
    check_dims(oracle, step.theta_t())?;
    let before = oracle.value(step.theta_t());
    let after = oracle.value(step.theta_next());
    if !(after < before) {
        return Err(DiscreteError::Effectiveness { before, after });
    }
    let r = evaluate(oracle, step)?;
    if !(dot(&r.y_bar, step.g()) > 0.0) {
        return Err(DiscreteError::Metric(crate::metric::MetricError::Alignment {
            psi: r.psi_bar,
            alignment: dot(&r.y_bar, step.g()),
            threshold: 0.0,
        }));
    }
    Ok(r)
}

fn check_dims(oracle: &dyn LossOracle, v: &[f64]) -> Result<(), DiscreteError> {
    if v.len() != oracle.dim() {
        return Err(DiscreteError::DimensionMismatch {
            expected: oracle.dim(),
            found: v.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::{Cubic, Quadratic, Quartic};
    use approx::assert_abs_diff_eq;

    /// Independent scalar bisection on `r(λ)` for `L = θ⁴`, θ = 1, p = −0.5.
    fn quartic_oracle_root() -> f64 {
        let r = |l: f64| 1.0625 - 1.5 * (1.0 - 0.5 * l).powi(2);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if r(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn quadratic_returns_midpoint_convention() {
        let o = Quadratic {
            a: SymMatrix::identity(2),
        };
        assert_eq!(taylor_lambda(&o, &[1.0, 0.5], &[-0.3, 0.2]).unwrap(), 0.5);
    }

    #[test]
    fn quartic_lambda_matches_bisection() {
        let lambda = taylor_lambda(&Quartic { dim: 1 }, &[1.0], &[-0.5]).unwrap();
        let oracle = quartic_oracle_root();
        assert_abs_diff_eq!(lambda, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(lambda, 2.0 * (1.0 - (17.0f64 / 24.0).sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(lambda, 0.31674, epsilon = 1e-5);
    }

    #[test]
    fn cubic_lambda_is_one_third() {
        // r(λ) = 1 − ½·6λ
        let lambda = taylor_lambda(&Cubic { dim: 1 }, &[0.0], &[1.0]).unwrap();
        assert_abs_diff_eq!(lambda, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_displacement_rejected() {
        assert!(taylor_lambda(&Quartic { dim: 1 }, &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn quadratic_discrete_gradient() {
        let o = Quadratic {
            a: SymMatrix::identity(2),
        };
        let step = DiscreteStep::new(vec![1.0, 0.0], vec![-1.0, 0.0], 0.1).unwrap();
        let r = discrete_gradient(&o, &step).unwrap();
        assert_abs_diff_eq!(r.y_bar[0], -0.95, epsilon = 1e-15);
        assert_eq!(r.y_bar[1], 0.0);
        let p = step.displacement();
        assert_abs_diff_eq!(dot(&p, &r.y_bar), 0.095, epsilon = 1e-15);
        assert_abs_diff_eq!(r.loss_before - r.loss_after, 0.095, epsilon = 1e-15);
    }

    #[test]
    fn quartic_discrete_gradient() {
        let step = DiscreteStep::new(vec![1.0], vec![-0.5], 1.0).unwrap();
        let r = discrete_gradient(&Quartic { dim: 1 }, &step).unwrap();
        assert_abs_diff_eq!(r.y_bar[0], -1.875, epsilon = 1e-12);
        assert_abs_diff_eq!(-0.5 * r.y_bar[0], 0.9375, epsilon = 1e-12);
        assert!(r.defining_residual <= 1e-9);
        assert!(r.psi_bar < 1e-12);
    }

    #[test]
    fn ineffective_step_refused() {
        let o = Quadratic {
            a: SymMatrix::identity(1),
        };
        let step = DiscreteStep::new(vec![1.0], vec![0.5], 1.0).unwrap();
        assert!(matches!(
            discrete_gradient(&o, &step),
            Err(DiscreteError::Effectiveness { .. })
        ));
        // equal loss is not a decrease
        let step = DiscreteStep::new(vec![1.0], vec![-2.0], 1.0).unwrap();
        assert!(matches!(
            discrete_gradient(&o, &step),
            Err(DiscreteError::Effectiveness { .. })
        ));
    }

    #[test]
    fn step_identity_is_exact() {
        let s = DiscreteStep::new(vec![0.1, 0.7], vec![0.3, -1.1], 0.37).unwrap();
        for i in 0..2 {
            assert_eq!(s.theta_next()[i], s.theta_t()[i] + s.eta() * s.g()[i]);
        }
        assert!(DiscreteStep::new(vec![0.0], vec![1.0], 0.0).is_err());
        let e = DiscreteStep::from_endpoints(vec![0.0, 1.0], &[0.5, 0.0], 0.25).unwrap();
        assert_eq!(e.g(), &[2.0, -4.0]);
    }
}
