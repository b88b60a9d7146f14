//! Metric constructions selectable by name.

use std::collections::BTreeMap;
use std::fmt;

use super::{
    build_canonical_metric, build_family_metric, closed_form_spectrum, Metric, MetricError, SpectrumReport,
    UpdateGradientPair,
};
use crate::linalg::vector::dot;

/// A rule for turning an aligned pair into a metric.
pub trait MetricStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn build(&self, pair: &UpdateGradientPair) -> Result<Metric, MetricError>;

    /// Spectrum of the metric [`build`](Self::build) would return. Strategies
    /// inside the one-parameter family answer in closed form, without
    /// forming the matrix.
    fn spectrum(&self, pair: &UpdateGradientPair) -> Result<SpectrumReport, MetricError> {
        let m = self.build(pair)?;
        let e = m.eigen();
        Ok(SpectrumReport {
            lambda_max: e.max(),
            lambda_min: e.min(),
            lambda_bulk: None,
            kappa: e.max() / e.min(),
            psi: pair.psi(),
            norm_ratio: pair.norm_ratio(),
        })
    }

    /// Family parameter, when the strategy lives in the one-parameter family.
    fn gamma(&self, pair: &UpdateGradientPair) -> Option<f64>;
}

/// Minimum-condition-number metric (γ = 1).
#[derive(Debug, Clone, Copy, Default)]
pub struct Optimal;

impl MetricStrategy for Optimal {
    fn name(&self) -> &'static str {
        "optimal"
    }
    fn build(&self, pair: &UpdateGradientPair) -> Result<Metric, MetricError> {
        build_family_metric(pair, 1.0)
    }
    fn spectrum(&self, pair: &UpdateGradientPair) -> Result<SpectrumReport, MetricError> {
        closed_form_spectrum(pair, 1.0)
    }
    fn gamma(&self, _: &UpdateGradientPair) -> Option<f64> {
        Some(1.0)
    }
}

/// One-parameter family member at a fixed γ.
#[derive(Debug, Clone, Copy)]
pub struct Family {
    pub gamma: f64,
}

impl MetricStrategy for Family {
    fn name(&self) -> &'static str {
        "family"
    }
    fn build(&self, pair: &UpdateGradientPair) -> Result<Metric, MetricError> {
        build_family_metric(pair, self.gamma)
    }
    fn spectrum(&self, pair: &UpdateGradientPair) -> Result<SpectrumReport, MetricError> {
        closed_form_spectrum(pair, self.gamma)
    }
    fn gamma(&self, _: &UpdateGradientPair) -> Option<f64> {
        Some(self.gamma)
    }
}

/// `yyᵀ/(yᵀg) + Σ wᵢ uᵢuᵢᵀ`. With unit weights this is the family member
/// at `γ = yᵀg / yᵀy`, so its spectrum is still available in closed form.
#[derive(Debug, Clone, Default)]
pub struct Canonical {
    pub weights: Option<Vec<f64>>,
}

impl MetricStrategy for Canonical {
    fn name(&self) -> &'static str {
        "canonical"
    }
    fn build(&self, pair: &UpdateGradientPair) -> Result<Metric, MetricError> {
        build_canonical_metric(pair, self.weights.as_deref())
    }
    fn spectrum(&self, pair: &UpdateGradientPair) -> Result<SpectrumReport, MetricError> {
        match self.gamma(pair) {
            Some(gamma) if gamma > 0.0 => closed_form_spectrum(pair, gamma),
            Some(_) => {
                pair.require_aligned()?;
                unreachable!("aligned pairs have a positive equivalent gamma")
            }
            None => {
                let m = self.build(pair)?;
                let e = m.eigen();
                Ok(SpectrumReport {
                    lambda_max: e.max(),
                    lambda_min: e.min(),
                    lambda_bulk: None,
                    kappa: e.max() / e.min(),
                    psi: pair.psi(),
                    norm_ratio: pair.norm_ratio(),
                })
            }
        }
    }
    fn gamma(&self, pair: &UpdateGradientPair) -> Option<f64> {
        self.weights
            .is_none()
            .then(|| pair.alignment() / dot(pair.y(), pair.y()))
    }
}

/// Parameters a strategy factory may consume.
#[derive(Debug, Clone, Default)]
pub struct StrategyParams {
    pub gamma: Option<f64>,
    pub weights: Option<Vec<f64>>,
}

pub type StrategyFactory = fn(&StrategyParams) -> Result<Box<dyn MetricStrategy>, MetricError>;

struct Entry {
    description: &'static str,
    factory: StrategyFactory,
}

/// Name-keyed table of metric strategies.
pub struct MetricRegistry {
    entries: BTreeMap<&'static str, Entry>,
}

impl MetricRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(
            "optimal",
            "one-parameter family at gamma = 1 (minimum condition number)",
            |_| Ok(Box::new(Optimal)),
        );
        r.register("family", "one-parameter family at --gamma", |p| {
            let gamma = p.gamma.ok_or(MetricError::MissingParameter {
                strategy: "family",
                parameter: "gamma",
            })?;
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(MetricError::InvalidGamma(gamma));
            }
            Ok(Box::new(Family { gamma }))
        });
        r.register(
            "canonical",
            "rank-one part plus weighted orthonormal complement (unit weights by default)",
            |p| {
                Ok(Box::new(Canonical {
                    weights: p.weights.clone(),
                }))
            },
        );
        r
    }

    /// Adds or replaces a strategy.
    pub fn register(&mut self, name: &'static str, description: &'static str, factory: StrategyFactory) {
        self.entries.insert(name, Entry { description, factory });
    }

    pub fn create(&self, name: &str, params: &StrategyParams) -> Result<Box<dyn MetricStrategy>, MetricError> {
        let entry = self.entries.get(name).ok_or_else(|| MetricError::UnknownStrategy {
            name: name.to_string(),
            available: self.names().join(", "),
        })?;
        (entry.factory)(params)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn describe(&self) -> impl Iterator<Item = (&'static str, &'static str)> + '_ {
        self.entries.iter().map(|(k, e)| (*k, e.description))
    }
}

impl Default for MetricRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
