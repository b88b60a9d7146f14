//! Loss functions with gradient and Hessian access.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::DiscreteError;
use crate::linalg::vector::norm;
use crate::linalg::{Matrix, SymMatrix};
use crate::tolerance;

/// An evaluable, twice differentiable loss.
///
/// Implementations must not mutate internal state while evaluating, so that
/// a single oracle can be shared across threads.
pub trait LossOracle: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, theta: &[f64]) -> f64;

    fn gradient(&self, theta: &[f64]) -> Vec<f64>;

    /// Exact Hessian when available; central differences of the gradient otherwise.
    fn hessian(&self, theta: &[f64]) -> SymMatrix {
        fd_hessian(self, theta)
    }

    fn name(&self) -> &str {
        "custom"
    }
}

impl fmt::Debug for dyn LossOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LossOracle({}, dim={})", self.name(), self.dim())
    }
}

/// Central-difference Hessian of the gradient with step `1e-5 · max(1, ‖θ‖)`,
/// symmetrized.
pub fn fd_hessian<O: LossOracle + ?Sized>(oracle: &O, theta: &[f64]) -> SymMatrix {
    let n = theta.len();
    let h = tolerance::FD_HESSIAN_STEP * norm(theta).max(1.0);
    let mut cols = Matrix::zeros(n, n);
    let mut probe = theta.to_vec();
    for j in 0..n {
        probe[j] = theta[j] + h;
        let gp = oracle.gradient(&probe);
        probe[j] = theta[j] - h;
        let gm = oracle.gradient(&probe);
        probe[j] = theta[j];
        for i in 0..n {
            cols[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    SymMatrix::symmetrize(&cols).expect("square by construction")
}

/// Compares the oracle gradient with central differences of its value at
/// each probe. Returns the worst relative discrepancy.
pub fn gradient_self_test<O: LossOracle + ?Sized>(oracle: &O, probes: &[Vec<f64>]) -> Result<f64, DiscreteError> {
    let mut worst: f64 = 0.0;
    for (k, theta) in probes.iter().enumerate() {
        if theta.len() != oracle.dim() {
            return Err(DiscreteError::DimensionMismatch {
                expected: oracle.dim(),
                found: theta.len(),
            });
        }
        let grad = oracle.gradient(theta);
        let mut probe = theta.clone();
        let mut diff = vec![0.0; theta.len()];
        for i in 0..theta.len() {
            let h = f64::EPSILON.cbrt() * theta[i].abs().max(1.0);
            probe[i] = theta[i] + h;
            let fp = oracle.value(&probe);
            probe[i] = theta[i] - h;
            let fm = oracle.value(&probe);
            probe[i] = theta[i];
            diff[i] = (fp - fm) / (2.0 * h) - grad[i];
        }
        let rel = norm(&diff) / norm(&grad).max(1.0);
        worst = worst.max(rel);
        if !(rel <= tolerance::GRADIENT_SELF_TEST) {
            return Err(DiscreteError::GradientSelfTest {
                probe: k,
                relative_error: rel,
            });
        }
    }
    Ok(worst)
}

/// `½ θᵀ A θ`
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub a: SymMatrix,
}

impl LossOracle for Quadratic {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn value(&self, theta: &[f64]) -> f64 {
        0.5 * crate::linalg::vector::dot(theta, &self.a.mul_vec(theta))
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        self.a.mul_vec(theta)
    }
    fn hessian(&self, _: &[f64]) -> SymMatrix {
        self.a.clone()
    }
    fn name(&self) -> &str {
        "quadratic"
    }
}

/// `Σ θᵢ⁴`
#[derive(Debug, Clone, Copy)]
pub struct Quartic {
    pub dim: usize,
}

impl LossOracle for Quartic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, theta: &[f64]) -> f64 {
        theta.iter().map(|t| t.powi(4)).sum()
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().map(|t| 4.0 * t.powi(3)).collect()
    }
    fn hessian(&self, theta: &[f64]) -> SymMatrix {
        SymMatrix::diagonal(&theta.iter().map(|t| 12.0 * t * t).collect::<Vec<_>>())
    }
    fn name(&self) -> &str {
        "quartic"
    }
}

/// `Σ θᵢ³`
#[derive(Debug, Clone, Copy)]
pub struct Cubic {
    pub dim: usize,
}

impl LossOracle for Cubic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, theta: &[f64]) -> f64 {
        theta.iter().map(|t| t.powi(3)).sum()
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().map(|t| 3.0 * t * t).collect()
    }
    fn hessian(&self, theta: &[f64]) -> SymMatrix {
        SymMatrix::diagonal(&theta.iter().map(|t| 6.0 * t).collect::<Vec<_>>())
    }
    fn name(&self) -> &str {
        "cubic"
    }
}

/// `¼(θ₀² − 1)² + ½ Σ_{i≥1} θᵢ² + c θ₀θ₁`; nonconvex for `|θ₀| < 1/√3`.
#[derive(Debug, Clone, Copy)]
pub struct DoubleWell {
    pub dim: usize,
    pub coupling: f64,
}

impl LossOracle for DoubleWell {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, theta: &[f64]) -> f64 {
        let x = theta[0];
        let rest: f64 = theta[1..].iter().map(|t| 0.5 * t * t).sum();
        let c = if self.dim > 1 {
            self.coupling * x * theta[1]
        } else {
            0.0
        };
        0.25 * (x * x - 1.0).powi(2) + rest + c
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let x = theta[0];
        let mut g: Vec<f64> = theta.to_vec();
        g[0] = x * (x * x - 1.0);
        if self.dim > 1 {
            g[0] += self.coupling * theta[1];
            g[1] += self.coupling * x;
        }
        g
    }
    fn hessian(&self, theta: &[f64]) -> SymMatrix {
        let x = theta[0];
        let c = self.coupling;
        SymMatrix::from_upper_fn(self.dim, |i, j| match (i, j) {
            (0, 0) => 3.0 * x * x - 1.0,
            (0, 1) => c,
            (i, j) if i == j => 1.0,
            _ => 0.0,
        })
    }
    fn name(&self) -> &str {
        "double-well"
    }
}

/// Chained Rosenbrock `Σ 100(θᵢ₊₁ − θᵢ²)² + (1 − θᵢ)²`.
#[derive(Debug, Clone, Copy)]
pub struct Rosenbrock {
    pub dim: usize,
}

impl LossOracle for Rosenbrock {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, t: &[f64]) -> f64 {
        t.windows(2)
            .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
            .sum()
    }
    fn gradient(&self, t: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; t.len()];
        for i in 0..t.len() - 1 {
            let d = t[i + 1] - t[i] * t[i];
            g[i] += -400.0 * t[i] * d - 2.0 * (1.0 - t[i]);
            g[i + 1] += 200.0 * d;
        }
        g
    }
    fn hessian(&self, t: &[f64]) -> SymMatrix {
        let n = t.len();
        let mut h = Matrix::zeros(n, n);
        for i in 0..n - 1 {
            h[(i, i)] += 1200.0 * t[i] * t[i] - 400.0 * t[i + 1] + 2.0;
            h[(i + 1, i + 1)] += 200.0;
            h[(i, i + 1)] += -400.0 * t[i];
            h[(i + 1, i)] += -400.0 * t[i];
        }
        SymMatrix::from_upper(&h).expect("square")
    }
    fn name(&self) -> &str {
        "rosenbrock"
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type HessFn = dyn Fn(&[f64]) -> SymMatrix + Send + Sync;

/// Oracle assembled from closures. Without a Hessian closure it falls back
/// to finite differences.
#[derive(Clone)]
pub struct FnOracle {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
    hessian: Option<Arc<HessFn>>,
}

impl FnOracle {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: None,
        }
    }

    pub fn with_hessian(mut self, hessian: impl Fn(&[f64]) -> SymMatrix + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }
}

impl LossOracle for FnOracle {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, theta: &[f64]) -> f64 {
        (self.value)(theta)
    }
    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        (self.gradient)(theta)
    }
    fn hessian(&self, theta: &[f64]) -> SymMatrix {
        match &self.hessian {
            Some(h) => h(theta),
            None => fd_hessian(self, theta),
        }
    }
}

pub type LossFactory = fn(usize) -> Result<Box<dyn LossOracle>, DiscreteError>;

/// Name-keyed table of built-in losses, parameterized by dimension.
pub struct LossRegistry {
    entries: BTreeMap<&'static str, (&'static str, LossFactory)>,
}

impl LossRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("quadratic", "1/2 θᵀAθ with A = diag(1..D)", |d| {
            let diag: Vec<f64> = (1..=d).map(|k| k as f64).collect();
            Ok(Box::new(Quadratic {
                a: SymMatrix::diagonal(&diag),
            }))
        });
        r.register("quartic", "Σ θᵢ⁴", |d| Ok(Box::new(Quartic { dim: d })));
        r.register("cubic", "Σ θᵢ³", |d| Ok(Box::new(Cubic { dim: d })));
        r.register(
            "double-well",
            "1/4(θ₀²−1)² + 1/2 Σ θᵢ² + 0.3 θ₀θ₁",
            |d| Ok(Box::new(DoubleWell { dim: d, coupling: 0.3 })),
        );
        r.register("rosenbrock", "chained Rosenbrock (D ≥ 2)", |d| {
            if d < 2 {
                return Err(DiscreteError::InvalidConfig("rosenbrock needs dim >= 2".into()));
            }
            Ok(Box::new(Rosenbrock { dim: d }))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, description: &'static str, factory: LossFactory) {
        self.entries.insert(name, (description, factory));
    }

    pub fn create(&self, name: &str, dim: usize) -> Result<Box<dyn LossOracle>, DiscreteError> {
        if dim == 0 {
            return Err(DiscreteError::InvalidConfig("loss dimension must be >= 1".into()));
        }
        let (_, f) = self.entries.get(name).ok_or_else(|| DiscreteError::UnknownName {
            kind: "loss",
            name: name.to_string(),
            available: self.names().join(", "),
        })?;
        f(dim)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn describe(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.entries.iter().map(|(k, (d, _))| (*k, *d))
    }
}

impl Default for LossRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
