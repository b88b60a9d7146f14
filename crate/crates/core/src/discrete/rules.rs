//! Update rules `θ ↦ g(θ)` used to drive discrete steps.

use std::collections::BTreeMap;

use super::{DiscreteError, LossOracle};

pub trait UpdateRule: Send + Sync {
    fn name(&self) -> &'static str;
    fn direction(&self, oracle: &dyn LossOracle, theta: &[f64]) -> Vec<f64>;
}

/// `g = −∇L`
#[derive(Debug, Clone, Copy, Default)]
pub struct GradientDescent;

impl UpdateRule for GradientDescent {
    fn name(&self) -> &'static str {
        "gd"
    }
    fn direction(&self, oracle: &dyn LossOracle, theta: &[f64]) -> Vec<f64> {
        oracle.gradient(theta).into_iter().map(|v| -v).collect()
    }
}

/// `−∇L` rotated by a fixed angle in the plane of the first two coordinates.
/// Descends whenever `|angle| < π/2`, yet is not a gradient field.
#[derive(Debug, Clone, Copy)]
pub struct RotatedGradient {
    pub angle: f64,
}

impl UpdateRule for RotatedGradient {
    fn name(&self) -> &'static str {
        "rotated"
    }
    fn direction(&self, oracle: &dyn LossOracle, theta: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = oracle.gradient(theta).into_iter().map(|v| -v).collect();
        if g.len() >= 2 {
            let (s, c) = self.angle.sin_cos();
            let (a, b) = (g[0], g[1]);
            g[0] = c * a - s * b;
            g[1] = s * a + c * b;
        }
        g
    }
}

/// `g = −diag(s) ∇L` with cyclic positive scales.
#[derive(Debug, Clone)]
pub struct DiagonalPreconditioned {
    pub scales: Vec<f64>,
}

impl UpdateRule for DiagonalPreconditioned {
    fn name(&self) -> &'static str {
        "diagonal"
    }
    fn direction(&self, oracle: &dyn LossOracle, theta: &[f64]) -> Vec<f64> {
        oracle
            .gradient(theta)
            .iter()
            .enumerate()
            .map(|(i, v)| -self.scales[i % self.scales.len()] * v)
            .collect()
    }
}

pub type RuleFactory = fn(Option<f64>) -> Result<Box<dyn UpdateRule>, DiscreteError>;

/// Name-keyed table of update rules; the optional parameter is rule specific
/// (rotation angle for `rotated`, largest scale for `diagonal`).
pub struct RuleRegistry {
    entries: BTreeMap<&'static str, (&'static str, RuleFactory)>,
}

impl RuleRegistry {
    pub fn with_builtins() -> Self {
        let mut entries: BTreeMap<&'static str, (&'static str, RuleFactory)> = BTreeMap::new();
        entries.insert("gd", ("plain gradient descent", |_| Ok(Box::new(GradientDescent))));
        entries.insert(
            "rotated",
            (
                "gradient rotated by PARAM rad (default 0.6) in the first coordinate plane",
                |p| {
                    let angle = p.unwrap_or(0.6);
                    if !(angle.abs() < std::f64::consts::FRAC_PI_2) {
                        return Err(DiscreteError::InvalidConfig(format!(
                            "rotation angle {angle} is not a descent rotation"
                        )));
                    }
                    Ok(Box::new(RotatedGradient { angle }))
                },
            ),
        );
        entries.insert(
            "diagonal",
            ("gradient scaled by diag(1, PARAM) cyclically (default 4)", |p| {
                let s = p.unwrap_or(4.0);
                if !(s > 0.0 && s.is_finite()) {
                    return Err(DiscreteError::InvalidConfig(format!("scale {s} must be positive")));
                }
                Ok(Box::new(DiagonalPreconditioned { scales: vec![1.0, s] }))
            }),
        );
        Self { entries }
    }

    pub fn register(&mut self, name: &'static str, description: &'static str, factory: RuleFactory) {
        self.entries.insert(name, (description, factory));
    }

    pub fn create(&self, name: &str, param: Option<f64>) -> Result<Box<dyn UpdateRule>, DiscreteError> {
        let (_, f) = self.entries.get(name).ok_or_else(|| DiscreteError::UnknownName {
            kind: "update rule",
            name: name.to_string(),
            available: self.names().join(", "),
        })?;
        f(param)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn describe(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.entries.iter().map(|(k, (d, _))| (*k, *d))
    }
}

impl Default for RuleRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::Quartic;
    use crate::linalg::vector::dot;

    #[test]
    fn builtin_rules_descend() {
        let o = Quartic { dim: 3 };
        let theta = [0.7, -0.4, 0.2];
        let grad = o.gradient(&theta);
        let reg = RuleRegistry::with_builtins();
        for name in reg.names() {
            let g = reg.create(name, None).unwrap().direction(&o, &theta);
            assert!(dot(&g, &grad) < 0.0, "{name}");
        }
    }

    #[test]
    fn bad_parameters() {
        let reg = RuleRegistry::with_builtins();
        assert!(reg.create("rotated", Some(2.0)).is_err());
        assert!(reg.create("diagonal", Some(-1.0)).is_err());
        assert!(reg.create("adam", None).is_err());
    }
}
