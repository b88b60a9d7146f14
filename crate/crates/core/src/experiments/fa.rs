use std::path::PathBuf;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    embedded_digits, optimal_spectrum, parse_labeled_dataset, synthetic_clusters, ExperimentError, LabeledData,
    TraceBuilder, TrajectoryTrace,
};
use crate::metric::UpdateGradientPair;
use crate::sampling::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DatasetSpec {
    Synthetic {
        classes: usize,
        samples_per_class: usize,
        cluster_spread: f64,
    },
    EmbeddedDigits,
    /// A file in the `NGLD` binary layout.
    File(PathBuf),
}

/// Signal used in place of `W2ᵀ` when propagating the output error back
/// to the hidden layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeedbackMode {
    /// Fixed random matrix drawn once at initialization.
    Fixed,
    /// `W2ᵀ` itself, which turns the rule into backpropagation.
    Transpose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaConfig {
    pub seed: u64,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub dataset: DatasetSpec,
    pub learning_rate: f64,
    pub steps: usize,
    pub window_m: usize,
    /// Minibatch size; `None` trains on the full set every step.
    pub batch_size: Option<usize>,
    /// Elementwise `tanh` on the hidden layer.
    pub tanh: bool,
    pub feedback: FeedbackMode,
}

impl Default for FaConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            input_dim: 64,
            hidden_dim: 16,
            output_dim: 3,
            dataset: DatasetSpec::Synthetic {
                classes: 3,
                samples_per_class: 100,
                cluster_spread: 1.0,
            },
            learning_rate: 0.002,
            steps: 2000,
            window_m: 50,
            batch_size: Some(10),
            tanh: false,
            feedback: FeedbackMode::Fixed,
        }
    }
}

impl FaConfig {
    /// Number of trainable parameters: `W1` then `W2`, each row-major.
    pub fn param_count(&self) -> usize {
        self.hidden_dim * self.input_dim + self.output_dim * self.hidden_dim
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.input_dim == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return bad("layer sizes must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if self.window_m == 0 || self.steps < self.window_m {
            return bad(format!(
                "need steps ≥ window_m ≥ 1, got steps = {}, window_m = {}",
                self.steps, self.window_m
            ));
        }
        if self.batch_size == Some(0) {
            return bad("batch size must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaRun {
    pub trace: TrajectoryTrace,
    /// Final `W1` then `W2`, row-major.
    pub final_params: Vec<f64>,
    pub samples: usize,
}

struct Network<'a> {
    cfg: &'a FaConfig,
    w1: Vec<f64>,
    w2: Vec<f64>,
    /// `hidden × output`
    feedback: Vec<f64>,
}

struct Gradients {
    bp: Vec<f64>,
    fa: Vec<f64>,
}

impl Network<'_> {
    fn forward(&self, x: &[f64], pre: &mut [f64], hid: &mut [f64], out: &mut [f64]) {
        let (ni, nh) = (self.cfg.input_dim, self.cfg.hidden_dim);
        for j in 0..nh {
            let row = &self.w1[j * ni..(j + 1) * ni];
            pre[j] = row.iter().zip(x).map(|(w, v)| w * v).sum();
            hid[j] = if self.cfg.tanh { pre[j].tanh() } else { pre[j] };
        }
        for (k, o) in out.iter_mut().enumerate() {
            let row = &self.w2[k * nh..(k + 1) * nh];
            *o = row.iter().zip(hid.iter()).map(|(w, h)| w * h).sum();
        }
    }

    /// `(1/N) Σ ½‖W2 φ(W1 x) − onehot‖²`
    fn loss(&self, data: &LabeledData) -> f64 {
        let (nh, no) = (self.cfg.hidden_dim, self.cfg.output_dim);
        let (mut pre, mut hid, mut out) = (vec![0.0; nh], vec![0.0; nh], vec![0.0; no]);
        let mut total = 0.0;
        for i in 0..data.len() {
            self.forward(data.sample(i), &mut pre, &mut hid, &mut out);
            total += out
                .iter()
                .enumerate()
                .map(|(k, o)| {
                    let e = o - if k == data.labels[i] { 1.0 } else { 0.0 };
                    0.5 * e * e
                })
                .sum::<f64>();
        }
        total / data.len() as f64
    }

    fn gradients(&self, data: &LabeledData, batch: &[usize]) -> Gradients {
        let (ni, nh, no) = (self.cfg.input_dim, self.cfg.hidden_dim, self.cfg.output_dim);
        let split = nh * ni;
        let mut bp = vec![0.0; split + no * nh];
        let mut fa = vec![0.0; split + no * nh];
        let (mut pre, mut hid, mut out) = (vec![0.0; nh], vec![0.0; nh], vec![0.0; no]);
        let (mut d_bp, mut d_fa) = (vec![0.0; nh], vec![0.0; nh]);
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let x = data.sample(i);
            self.forward(x, &mut pre, &mut hid, &mut out);
            let err: Vec<f64> = out
                .iter()
                .enumerate()
                .map(|(k, o)| scale * (o - if k == data.labels[i] { 1.0 } else { 0.0 }))
                .collect();
            for k in 0..no {
                for j in 0..nh {
                    bp[split + k * nh + j] += err[k] * hid[j];
                }
            }
            for j in 0..nh {
                let deriv = if self.cfg.tanh { 1.0 - hid[j] * hid[j] } else { 1.0 };
                let (mut sb, mut sf) = (0.0, 0.0);
                for k in 0..no {
                    sb += self.w2[k * nh + j] * err[k];
                    sf += self.feedback[j * no + k] * err[k];
                }
                d_bp[j] = sb * deriv;
                d_fa[j] = sf * deriv;
            }
            for j in 0..nh {
                for (l, xv) in x.iter().enumerate() {
                    bp[j * ni + l] += d_bp[j] * xv;
                    fa[j * ni + l] += d_fa[j] * xv;
                }
            }
        }
        fa[split..].copy_from_slice(&bp[split..]);
        Gradients { bp, fa }
    }
}

fn load(spec: &DatasetSpec, cfg: &FaConfig, rng: &mut impl Rng) -> Result<LabeledData, ExperimentError> {
    match spec {
        DatasetSpec::Synthetic {
            classes,
            samples_per_class,
            cluster_spread,
        } => synthetic_clusters(rng, *classes, *samples_per_class, cfg.input_dim, *cluster_spread),
        DatasetSpec::EmbeddedDigits => Ok(embedded_digits()),
        DatasetSpec::File(path) => {
            let bytes =
                std::fs::read(path).map_err(|e| ExperimentError::Dataset(format!("{}: {e}", path.display())))?;
            parse_labeled_dataset(&bytes)
        }
    }
}

/// Trains a two-layer network with feedback alignment and records, at every
/// step, the flattened update `g` against the negative backpropagation
/// gradient `y` on the same batch, together with the full-set loss.
pub fn run_feedback_alignment(config: &FaConfig) -> Result<FaRun, ExperimentError> {
    config.validate()?;
    let mut rng = seeded_rng(config.seed);
    let data = load(&config.dataset, config, &mut rng)?;
    if data.dims != config.input_dim {
        return Err(ExperimentError::Config(format!(
            "dataset has {} features but input_dim = {}",
            data.dims, config.input_dim
        )));
    }
    if data.classes > config.output_dim {
        return Err(ExperimentError::Config(format!(
            "dataset has {} classes but output_dim = {}",
            data.classes, config.output_dim
        )));
    }
    let (ni, nh, no) = (config.input_dim, config.hidden_dim, config.output_dim);
    let mut normal = |n: usize, fan_in: usize| -> Vec<f64> {
        let s = 1.0 / (fan_in as f64).sqrt();
        (0..n).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
    };
    let w1 = normal(nh * ni, ni);
    let w2 = normal(no * nh, nh);
    let feedback = normal(nh * no, nh);
    let mut net = Network {
        cfg: config,
        w1,
        w2,
        feedback,
    };

    let all: Vec<usize> = (0..data.len()).collect();
    let batch_size = config.batch_size.map(|b| b.min(data.len()));
    let mut trace = TraceBuilder::default();
    let mut truncated = None;
    for t in 0..=config.steps {
        if config.feedback == FeedbackMode::Transpose {
            for j in 0..nh {
                for k in 0..no {
                    net.feedback[j * no + k] = net.w2[k * nh + j];
                }
            }
        }
        let loss = net.loss(&data);
        let batch = match batch_size {
            Some(b) => {
                let mut idx = index::sample(&mut rng, data.len(), b).into_vec();
                idx.sort_unstable();
                idx
            }
            None => all.clone(),
        };
        let grads = net.gradients(&data, &batch);
        let g: Vec<f64> = grads.fa.iter().map(|v| -v).collect();
        let y: Vec<f64> = grads.bp.iter().map(|v| -v).collect();
        let pair = match UpdateGradientPair::new(g, y) {
            Ok(p) => p,
            Err(e) => {
                truncated = Some(format!("step {t}: {e}"));
                break;
            }
        };
        let spectrum = optimal_spectrum(&pair)?;
        if t < config.steps {
            let lr = config.learning_rate;
            let (dw1, dw2) = pair.g().split_at(nh * ni);
            net.w1.iter_mut().zip(dw1).for_each(|(w, d)| *w += lr * d);
            net.w2.iter_mut().zip(dw2).for_each(|(w, d)| *w += lr * d);
        }
        trace.push(t as f64, loss, pair, spectrum);
    }
    if trace.len() <= config.window_m {
        return Err(ExperimentError::Config(format!(
            "run stopped after {} steps: {:?}",
            trace.len(),
            truncated
        )));
    }
    let trace = trace.finish(config.window_m, truncated)?;
    let final_params = net.w1.iter().chain(&net.w2).copied().collect();
    Ok(FaRun {
        trace,
        final_params,
        samples: data.len(),
    })
}
