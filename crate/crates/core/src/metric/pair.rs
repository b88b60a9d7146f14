use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::linalg::vector::{dot, norm, sin_cos_between};
use crate::tolerance;

/// An update direction `g` together with the negative loss gradient `y`
/// at the same parameter point.
///
/// Construction only checks shape, finiteness and non-zero norms. Alignment
/// (`yᵀg > 0`) is what makes the pair usable for metric construction and
/// is enforced by [`UpdateGradientPair::require_aligned`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair", into = "RawPair")]
pub struct UpdateGradientPair {
    g: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPair {
    g: Vec<f64>,
    y: Vec<f64>,
}

impl TryFrom<RawPair> for UpdateGradientPair {
    type Error = MetricError;
    fn try_from(r: RawPair) -> Result<Self, MetricError> {
        UpdateGradientPair::new(r.g, r.y)
    }
}

impl From<UpdateGradientPair> for RawPair {
    fn from(p: UpdateGradientPair) -> Self {
        RawPair { g: p.g, y: p.y }
    }
}

impl UpdateGradientPair {
    pub fn new(g: Vec<f64>, y: Vec<f64>) -> Result<Self, MetricError> {
        if g.is_empty() {
            return Err(MetricError::InvalidPair("dimension must be at least 1".into()));
        }
        if g.len() != y.len() {
            return Err(MetricError::InvalidPair(format!(
                "g has dimension {} but y has dimension {}",
                g.len(),
                y.len()
            )));
        }
        if let Some(k) = g.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(MetricError::InvalidPair(format!(
                "non-finite component at flat index {k}"
            )));
        }
        if norm(&g) == 0.0 {
            return Err(MetricError::InvalidPair("g has zero norm".into()));
        }
        if norm(&y) == 0.0 {
            return Err(MetricError::InvalidPair("y has zero norm".into()));
        }
        let ratio = norm(&y) / norm(&g);
        if !ratio.is_normal() {
            return Err(MetricError::InvalidPair(format!(
                "‖y‖/‖g‖ = {ratio:e} is outside the normal floating-point range"
            )));
        }
        Ok(Self { g, y })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `yᵀg`; positive exactly when the update decreases the loss.
    pub fn alignment(&self) -> f64 {
        dot(&self.y, &self.g)
    }

    /// `‖y‖ / ‖g‖`
    pub fn norm_ratio(&self) -> f64 {
        norm(&self.y) / norm(&self.g)
    }

    /// `(|sin ψ|, cos ψ)`
    pub fn sin_cos(&self) -> (f64, f64) {
        sin_cos_between(&self.y, &self.g).expect("pair invariants guarantee a valid angle")
    }

    /// Angle ψ ∈ [0, π] between `y` and `g`.
    pub fn psi(&self) -> f64 {
        let (s, c) = self.sin_cos();
        s.atan2(c)
    }

    pub fn is_aligned(&self) -> bool {
        self.alignment() > tolerance::ALIGNMENT * norm(&self.y) * norm(&self.g)
    }

    pub fn require_aligned(&self) -> Result<(), MetricError> {
        if self.is_aligned() {
            Ok(())
        } else {
            Err(MetricError::Alignment {
                psi: self.psi(),
                alignment: self.alignment(),
                threshold: tolerance::ALIGNMENT * norm(&self.y) * norm(&self.g),
            })
        }
    }
}

/// Pair for a loss that depends explicitly on time: the parameter vector is
/// extended with `t`, so `v̇ = (θ̇, 1)` and the negative gradient gains
/// `−∂L/∂t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedPair {
    v_dot: Vec<f64>,
    neg_grad_v: Vec<f64>,
}

impl ExtendedPair {
    pub fn v_dot(&self) -> &[f64] {
        &self.v_dot
    }

    pub fn neg_grad_v(&self) -> &[f64] {
        &self.neg_grad_v
    }

    /// Total loss rate is `−alignment()`.
    pub fn alignment(&self) -> f64 {
        dot(&self.v_dot, &self.neg_grad_v)
    }

    /// The extended pair as an ordinary `(g, y)` pair of dimension `D + 1`.
    pub fn to_pair(&self) -> Result<UpdateGradientPair, MetricError> {
        UpdateGradientPair::new(self.v_dot.clone(), self.neg_grad_v.clone())
    }
}

pub fn extend_time_varying(theta_dot: &[f64], grad_theta: &[f64], grad_t: f64) -> Result<ExtendedPair, MetricError> {
    if theta_dot.len() != grad_theta.len() {
        return Err(MetricError::DimensionMismatch {
            expected: theta_dot.len(),
            found: grad_theta.len(),
        });
    }
    if theta_dot.iter().chain(grad_theta).any(|v| !v.is_finite()) || !grad_t.is_finite() {
        return Err(MetricError::InvalidPair(
            "non-finite input to time-varying extension".into(),
        ));
    }
    let mut v_dot = theta_dot.to_vec();
    v_dot.push(1.0);
    let mut neg_grad_v: Vec<f64> = grad_theta.iter().map(|v| -v).collect();
    neg_grad_v.push(-grad_t);
    Ok(ExtendedPair { v_dot, neg_grad_v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_validation() {
        assert!(UpdateGradientPair::new(vec![], vec![]).is_err());
        assert!(UpdateGradientPair::new(vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(UpdateGradientPair::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(UpdateGradientPair::new(vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(UpdateGradientPair::new(vec![f64::INFINITY], vec![1.0]).is_err());
        let p = UpdateGradientPair::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert!(!p.is_aligned());
        assert!(matches!(p.require_aligned(), Err(MetricError::Alignment { .. })));
    }

    #[test]
    fn static_loss_pads_with_unit_time() {
        let e = extend_time_varying(&[1.0, -2.0], &[-1.0, 2.0], 0.0).unwrap();
        assert_eq!(e.v_dot(), &[1.0, -2.0, 1.0]);
        assert_eq!(e.neg_grad_v(), &[1.0, -2.0, -0.0]);
        assert_eq!(e.alignment(), 5.0);
    }

    #[test]
    fn gradient_flow_with_decreasing_loss_in_time() {
        let grad = [3.0, 4.0];
        let theta_dot = [-3.0, -4.0];
        let e = extend_time_varying(&theta_dot, &grad, -0.5).unwrap();
        // ‖∇θ L‖² − ∂L/∂t
        assert_eq!(e.alignment(), 25.0 + 0.5);
        assert!(e.to_pair().unwrap().is_aligned());
    }

    #[test]
    fn time_drift_can_break_alignment() {
        let grad = [3.0, 4.0];
        let e = extend_time_varying(&[-3.0, -4.0], &grad, 2.0 * 25.0).unwrap();
        assert_eq!(e.alignment(), -25.0);
        assert!(matches!(
            e.to_pair().unwrap().require_aligned(),
            Err(MetricError::Alignment { .. })
        ));
    }

    #[test]
    fn serde_roundtrip_validates() {
        let p = UpdateGradientPair::new(vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<UpdateGradientPair>(&s).unwrap(), p);
        assert!(serde_json::from_str::<UpdateGradientPair>(r#"{"g":[0.0],"y":[1.0]}"#).is_err());
    }
}
