//! Front end for the `natgrad-lens` binary: argument parsing, layered
//! settings and the command implementations.

pub mod commands;
pub mod settings;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use natgrad_lens::discrete::DiscreteError;
use natgrad_lens::experiments::ExperimentError;
use natgrad_lens::io::{Header, IoError, OutputFormat};
use natgrad_lens::metric::MetricError;

pub const OUT_ENV: &str = "NATGRAD_LENS_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] IoError),

    #[error(transparent)]
    Experiment(#[from] ExperimentError),

    #[error(transparent)]
    Discrete(#[from] DiscreteError),

    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Parser)]
#[command(
    name = "natgrad-lens",
    version,
    about = "Reconstruct and inspect the metric behind an effective learning rule"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command. Each one overrides the matching key of
/// the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory; falls back to the config file, then $NATGRAD_LENS_OUT, then `.`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "csv|json")]
    pub format: Option<String>,
    /// Family parameter for `analyze`.
    #[arg(long, value_name = "X")]
    pub gamma: Option<f64>,
    /// Effectiveness window.
    #[arg(long, value_name = "N")]
    pub m: Option<usize>,
    /// Also write line-chart SVGs.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum of the metric for every (g, y) pair in a file.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Pair file (CSV, or JSON by extension).
        #[arg(long, short, value_name = "PATH")]
        input: Option<PathBuf>,
        /// Metric strategy: optimal, family, canonical.
        #[arg(long)]
        metric: Option<String>,
    },
    /// Stable linear system as natural gradient flow on its Lyapunov loss.
    Lti {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        dim: Option<usize>,
        /// System matrix, rows separated by `;` (random Hurwitz when omitted).
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        theta0: Option<String>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Feedback alignment against backpropagation on a small network.
    Fa {
        #[command(flatten)]
        common: CommonArgs,
        /// synthetic, digits, or a path to an NGLD file.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        hidden_dim: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Minibatch size or `full`.
        #[arg(long)]
        batch_size: Option<String>,
        #[arg(long)]
        tanh: bool,
        /// fixed or transpose.
        #[arg(long)]
        feedback: Option<String>,
    },
    /// Discrete step on a test loss: discrete gradient, metrics and learning-rate bounds.
    Discrete {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        loss: Option<String>,
        #[arg(long)]
        rule: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        rule_param: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        theta0: Option<String>,
        /// Initial learning rate for the certified-step iteration.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        fraction: Option<f64>,
        /// Noisy-gradient samples for the stochastic metric (0 skips it).
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Windowed effectiveness of a loss sequence.
    Effectiveness {
        #[command(flatten)]
        common: CommonArgs,
        /// One loss per line, or a table with a `loss` column.
        #[arg(long, short, value_name = "PATH")]
        input: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Analyze { .. } => "analyze",
            Self::Lti { .. } => "lti",
            Self::Fa { .. } => "fa",
            Self::Discrete { .. } => "discrete",
            Self::Effectiveness { .. } => "effectiveness",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Self::Analyze { common, .. }
            | Self::Lti { common, .. }
            | Self::Fa { common, .. }
            | Self::Discrete { common, .. }
            | Self::Effectiveness { common, .. } => common,
        }
    }
}

/// What was run, echoed into every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
    pub settings: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn header(&self) -> Header {
        let mut h = Header::new();
        h.insert("command".into(), self.command.clone());
        h.insert("seed".into(), self.seed.to_string());
        h.insert("format".into(), self.format.to_string());
        h.insert("output_dir".into(), self.output_dir.display().to_string());
        if let Some(p) = &self.config_path {
            h.insert("config_path".into(), p.display().to_string());
        }
        h.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        for (k, v) in &self.settings {
            h.insert(format!("config.{k}"), v.clone());
        }
        h
    }
}

/// Files written and a short human-readable summary.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub manifest: Option<RunManifest>,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

pub fn run(cli: Cli) -> Result<RunOutput, CliError> {
    commands::dispatch(&cli.command)
}
