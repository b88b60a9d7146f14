//! Desk-scale experiments: a stable linear system viewed as natural gradient
//! flow on its Lyapunov function, feedback alignment against
//! backpropagation, and the windowed effectiveness check.

mod dataset;
mod effectiveness;
mod fa;
mod lti;

pub use dataset::{embedded_digits, parse_labeled_dataset, synthetic_clusters, LabeledData, DATASET_MAGIC};
pub use effectiveness::{check_effectiveness, EffectivenessReport};
pub use fa::{run_feedback_alignment, DatasetSpec, FaConfig, FaRun, FeedbackMode};
pub use lti::{random_hurwitz, run_lti, HurwitzSource, LtiConfig, LtiRun};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::metric::{MetricError, SpectrumReport, UpdateGradientPair};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("loss sequence of length {len} is too short for window {window}")]
    TooShort { len: usize, window: usize },

    #[error(transparent)]
    Metric(#[from] MetricError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Per-step record of a run. All vectors have one entry per recorded step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryTrace {
    pub times: Vec<f64>,
    pub losses: Vec<f64>,
    pub pairs: Vec<UpdateGradientPair>,
    /// Spectrum of the optimal metric where the pair is aligned.
    pub spectra: Vec<Option<SpectrumReport>>,
    /// `‖M_opt g − y‖ / ‖y‖` where a spectrum exists.
    pub map_residuals: Vec<Option<f64>>,
    pub effectiveness: EffectivenessReport,
    /// Set when the run stopped early, with the reason.
    pub truncated: Option<String>,
}

impl TrajectoryTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn has_consistent_lengths(&self) -> bool {
        let n = self.times.len();
        self.losses.len() == n && self.pairs.len() == n && self.spectra.len() == n && self.map_residuals.len() == n
    }

    pub fn psis(&self) -> Vec<f64> {
        self.pairs.iter().map(UpdateGradientPair::psi).collect()
    }
}

/// Records steps as they are produced.
#[derive(Debug, Default)]
pub(crate) struct TraceBuilder {
    times: Vec<f64>,
    losses: Vec<f64>,
    pairs: Vec<UpdateGradientPair>,
    spectra: Vec<Option<SpectrumReport>>,
    map_residuals: Vec<Option<f64>>,
}

impl TraceBuilder {
    pub(crate) fn push(
        &mut self,
        time: f64,
        loss: f64,
        pair: UpdateGradientPair,
        spectrum: Option<(SpectrumReport, f64)>,
    ) {
        self.times.push(time);
        self.losses.push(loss);
        self.pairs.push(pair);
        self.spectra.push(spectrum.map(|s| s.0));
        self.map_residuals.push(spectrum.map(|s| s.1));
    }

    pub(crate) fn len(&self) -> usize {
        self.times.len()
    }

    pub(crate) fn finish(self, window_m: usize, truncated: Option<String>) -> Result<TrajectoryTrace, ExperimentError> {
        let effectiveness = check_effectiveness(&self.losses, window_m)?;
        Ok(TrajectoryTrace {
            times: self.times,
            losses: self.losses,
            pairs: self.pairs,
            spectra: self.spectra,
            map_residuals: self.map_residuals,
            effectiveness,
            truncated,
        })
    }
}

/// Optimal-metric spectrum and matrix-free map residual for an aligned pair.
pub(crate) fn optimal_spectrum(pair: &UpdateGradientPair) -> Result<Option<(SpectrumReport, f64)>, MetricError> {
    use crate::linalg::vector::{norm, sub};
    if !pair.is_aligned() {
        return Ok(None);
    }
    let s = crate::metric::closed_form_spectrum(pair, 1.0)?;
    let mg = crate::metric::apply_family_metric(pair, 1.0, pair.g())?;
    Ok(Some((s, norm(&sub(&mg, pair.y())) / norm(pair.y()))))
}
