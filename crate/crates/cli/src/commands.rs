//! Command implementations. Each resolves its settings, runs the library
//! operation and writes its outputs atomically into the output directory.

use std::path::PathBuf;

use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use natgrad_lens::discrete::{
    certified_step, continuum_limit_probe, natural_gradient_step_residual, stochastic_average_metric,
    stochastic_sample, LossRegistry, RuleRegistry,
};
use natgrad_lens::experiments::{
    check_effectiveness, parse_labeled_dataset, run_feedback_alignment, run_lti, DatasetSpec, FaConfig, FeedbackMode,
    HurwitzSource, LtiConfig, TrajectoryTrace,
};
use natgrad_lens::io::{
    fmt_f64, fmt_opt, line_chart_svg, parse_loss_sequence, parse_pairs, read_text, spectrum_row, trace_rows,
    write_atomic, write_csv_table, write_effectiveness, write_pairs, write_spectrum_rows, write_trace_rows, Header,
    OutputFormat, PairRecord, RowStatus, Series,
};
use natgrad_lens::linalg::Matrix;
use natgrad_lens::metric::{MetricRegistry, StrategyParams};
use natgrad_lens::sampling::seeded_rng;

use crate::settings::{key, parse_matrix, Key, Settings};
use crate::{CliError, Command, CommonArgs, RunManifest, RunOutput, OUT_ENV};

const COMMON_KEYS: [Key; 4] = [
    key("seed", Some("42"), "random seed, echoed into every output"),
    key("out", None, "output directory"),
    key("format", Some("csv"), "csv or json"),
    key("svg", Some("false"), "also write SVG line charts"),
];

pub const ANALYZE_KEYS: &[Key] = &[
    key("input", None, "pair file"),
    key("metric", Some("optimal"), "optimal, family or canonical"),
    key(
        "gamma",
        None,
        "family parameter; implies metric = family unless metric is set",
    ),
];

pub const LTI_KEYS: &[Key] = &[
    key("dim", Some("2"), "state dimension"),
    key(
        "a",
        None,
        "system matrix, rows separated by ';' (random Hurwitz from seed when absent)",
    ),
    key("theta0", None, "initial state (all ones when absent)"),
    key("dt", Some("0.001"), "RK4 step"),
    key("t_end", Some("10"), "final time"),
    key("m", Some("1"), "effectiveness window"),
];

pub const FA_KEYS: &[Key] = &[
    key(
        "dataset",
        Some("synthetic"),
        "synthetic, digits, or a path to an NGLD file",
    ),
    key("input_dim", None, "input size (taken from the dataset when absent)"),
    key("hidden_dim", Some("16"), "hidden layer size"),
    key("output_dim", None, "output size (number of classes when absent)"),
    key("classes", Some("3"), "synthetic classes"),
    key("samples_per_class", Some("100"), "synthetic samples per class"),
    key("cluster_spread", Some("1.0"), "synthetic cluster standard deviation"),
    key("learning_rate", Some("0.002"), "step size"),
    key("steps", Some("2000"), "training steps"),
    key("m", Some("50"), "effectiveness window"),
    key("batch_size", Some("10"), "minibatch size or 'full'"),
    key("tanh", Some("false"), "tanh hidden layer"),
    key("feedback", Some("fixed"), "fixed (random B) or transpose (B = W2ᵀ)"),
];

pub const DISCRETE_KEYS: &[Key] = &[
    key("loss", Some("double-well"), "test loss"),
    key("rule", Some("gd"), "update rule"),
    key("rule_param", None, "rule parameter"),
    key("dim", Some("2"), "parameter dimension"),
    key("theta0", None, "starting point (0.1 in every coordinate when absent)"),
    key("eta", Some("0.5"), "initial learning rate"),
    key("fraction", Some("0.9"), "fraction of the certified bound"),
    key(
        "probe_etas",
        Some("0.1,0.03,0.01,0.003,0.001,0.0003,0.0001,0.00003,0.00001"),
        "learning rates for the continuum probe",
    ),
    key("samples", Some("0"), "noisy-gradient samples for the stochastic metric"),
    key("sigma", Some("0.1"), "gradient noise standard deviation"),
];

pub const EFFECTIVENESS_KEYS: &[Key] = &[key("input", None, "loss sequence file"), key("m", Some("1"), "window")];

struct Context {
    manifest: RunManifest,
    settings: Settings,
    header: Header,
    output: RunOutput,
}

impl Context {
    fn new(
        command: &str,
        keys: &[Key],
        common: &CommonArgs,
        extra: Vec<(&'static str, Option<String>)>,
    ) -> Result<Self, CliError> {
        let all: Vec<Key> = COMMON_KEYS.iter().chain(keys).copied().collect();
        let mut overrides: Vec<(&'static str, Option<String>)> = vec![
            ("seed", common.seed.map(|v| v.to_string())),
            ("out", common.out.as_ref().map(|p| p.display().to_string())),
            ("format", common.format.clone()),
            ("svg", common.svg.then(|| "true".to_string())),
        ];
        if keys.iter().any(|k| k.name == "gamma") {
            overrides.push(("gamma", common.gamma.map(|v| v.to_string())));
        } else if common.gamma.is_some() {
            return Err(CliError::Config(format!("--gamma does not apply to `{command}`")));
        }
        if keys.iter().any(|k| k.name == "m") {
            overrides.push(("m", common.m.map(|v| v.to_string())));
        } else if common.m.is_some() {
            return Err(CliError::Config(format!("--m does not apply to `{command}`")));
        }
        overrides.extend(extra);
        let settings = Settings::resolve(&all, common.config.as_deref(), overrides)?;
        let output_dir = settings
            .raw("out")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&output_dir)
            .map_err(|e| CliError::Config(format!("output directory {}: {e}", output_dir.display())))?;
        let format: OutputFormat = settings.get::<String>("format")?.parse()?;
        let manifest = RunManifest {
            command: command.to_string(),
            config_path: common.config.clone(),
            seed: settings.get("seed")?,
            output_dir,
            format,
            settings: settings.values().clone(),
        };
        let header = manifest.header();
        Ok(Self {
            manifest,
            settings,
            header,
            output: RunOutput::default(),
        })
    }

    fn path(&self, stem: &str) -> PathBuf {
        self.manifest
            .output_dir
            .join(format!("{stem}.{}", self.manifest.format.extension()))
    }

    fn write(&mut self, path: PathBuf, text: &str) -> Result<(), CliError> {
        write_atomic(&path, text.as_bytes())?;
        self.output.files.push(path);
        Ok(())
    }

    fn svg_enabled(&self) -> Result<bool, CliError> {
        self.settings.flag("svg")
    }

    fn finish(mut self) -> RunOutput {
        self.output.manifest = Some(self.manifest);
        self.output
    }
}

fn opt_string<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn path_string(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

pub fn dispatch(command: &Command) -> Result<RunOutput, CliError> {
    match command {
        Command::Analyze { common, input, metric } => {
            let ctx = Context::new(
                "analyze",
                ANALYZE_KEYS,
                common,
                vec![("input", path_string(input)), ("metric", metric.clone())],
            )?;
            analyze(ctx)
        }
        Command::Lti {
            common,
            dim,
            a,
            theta0,
            dt,
            t_end,
        } => {
            let ctx = Context::new(
                "lti",
                LTI_KEYS,
                common,
                vec![
                    ("dim", opt_string(dim)),
                    ("a", a.clone()),
                    ("theta0", theta0.clone()),
                    ("dt", opt_string(dt)),
                    ("t_end", opt_string(t_end)),
                ],
            )?;
            lti(ctx)
        }
        Command::Fa {
            common,
            dataset,
            hidden_dim,
            learning_rate,
            steps,
            batch_size,
            tanh,
            feedback,
        } => {
            let ctx = Context::new(
                "fa",
                FA_KEYS,
                common,
                vec![
                    ("dataset", dataset.clone()),
                    ("hidden_dim", opt_string(hidden_dim)),
                    ("learning_rate", opt_string(learning_rate)),
                    ("steps", opt_string(steps)),
                    ("batch_size", batch_size.clone()),
                    ("tanh", tanh.then(|| "true".to_string())),
                    ("feedback", feedback.clone()),
                ],
            )?;
            fa(ctx)
        }
        Command::Discrete {
            common,
            loss,
            rule,
            rule_param,
            dim,
            theta0,
            eta,
            fraction,
            samples,
            sigma,
        } => {
            let ctx = Context::new(
                "discrete",
                DISCRETE_KEYS,
                common,
                vec![
                    ("loss", loss.clone()),
                    ("rule", rule.clone()),
                    ("rule_param", opt_string(rule_param)),
                    ("dim", opt_string(dim)),
                    ("theta0", theta0.clone()),
                    ("eta", opt_string(eta)),
                    ("fraction", opt_string(fraction)),
                    ("samples", opt_string(samples)),
                    ("sigma", opt_string(sigma)),
                ],
            )?;
            discrete(ctx)
        }
        Command::Effectiveness { common, input } => {
            let ctx = Context::new(
                "effectiveness",
                EFFECTIVENESS_KEYS,
                common,
                vec![("input", path_string(input))],
            )?;
            effectiveness(ctx)
        }
    }
}

fn input_path(s: &Settings) -> Result<PathBuf, CliError> {
    s.raw("input")
        .map(PathBuf::from)
        .ok_or_else(|| CliError::Config("an input file is required (--input)".into()))
}

fn analyze(mut ctx: Context) -> Result<RunOutput, CliError> {
    let path = input_path(&ctx.settings)?;
    let in_format = OutputFormat::from_path(&path).unwrap_or(OutputFormat::Csv);
    let (_, records) =
        parse_pairs(in_format, &read_text(&path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let gamma: Option<f64> = ctx.settings.opt("gamma")?;
    let name = if gamma.is_some() && !ctx.settings.is_explicit("metric") {
        "family".to_string()
    } else {
        ctx.settings.get::<String>("metric")?
    };
    let strategy = MetricRegistry::with_builtins().create(&name, &StrategyParams { gamma, weights: None })?;
    let rows: Vec<_> = records
        .iter()
        .enumerate()
        .map(|(i, r)| spectrum_row(i, r, strategy.as_ref()))
        .collect();
    let degenerate = rows.iter().filter(|r| r.status == RowStatus::Degenerate).count();

    let text = write_spectrum_rows(ctx.manifest.format, &ctx.header, &rows)?;
    let out = ctx.path("spectra");
    ctx.write(out, &text)?;
    if ctx.svg_enabled()? {
        let kappa: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.kappa.map(|k| (r.index as f64, k)))
            .collect();
        let svg = line_chart_svg(
            "condition number per pair",
            "pair index",
            &[Series {
                name: "κ".into(),
                points: kappa,
            }],
        );
        let p = ctx.manifest.output_dir.join("spectra.svg");
        ctx.write(p, &svg)?;
    }
    ctx.output.summary.push(format!(
        "analyzed {} pairs with `{name}`: {degenerate} degenerate",
        rows.len()
    ));
    Ok(ctx.finish())
}

fn spectrum_chart(trace: &TrajectoryTrace, x_label: &str) -> String {
    let pick = |f: fn(&natgrad_lens::metric::SpectrumReport) -> f64| -> Vec<(f64, f64)> {
        trace
            .times
            .iter()
            .zip(&trace.spectra)
            .filter_map(|(t, s)| s.as_ref().map(|s| (*t, f(s))))
            .collect()
    };
    line_chart_svg(
        "spectrum of the optimal metric",
        x_label,
        &[
            Series {
                name: "λ_max".into(),
                points: pick(|s| s.lambda_max),
            },
            Series {
                name: "λ_min".into(),
                points: pick(|s| s.lambda_min),
            },
            Series {
                name: "κ".into(),
                points: pick(|s| s.kappa),
            },
        ],
    )
}

fn write_trace_outputs(ctx: &mut Context, trace: &TrajectoryTrace, x_label: &str) -> Result<(), CliError> {
    let text = write_trace_rows(ctx.manifest.format, &ctx.header, &trace_rows(trace))?;
    let p = ctx.path("trace");
    ctx.write(p, &text)?;
    let text = write_effectiveness(ctx.manifest.format, &ctx.header, &trace.effectiveness)?;
    let p = ctx.path("effectiveness");
    ctx.write(p, &text)?;
    if ctx.svg_enabled()? {
        let p = ctx.manifest.output_dir.join("spectrum.svg");
        ctx.write(p, &spectrum_chart(trace, x_label))?;
        let loss: Vec<(f64, f64)> = trace.times.iter().copied().zip(trace.losses.iter().copied()).collect();
        let p = ctx.manifest.output_dir.join("loss.svg");
        ctx.write(
            p,
            &line_chart_svg(
                "loss",
                x_label,
                &[Series {
                    name: "L".into(),
                    points: loss,
                }],
            ),
        )?;
    }
    let e = &trace.effectiveness;
    ctx.output.summary.push(format!(
        "{} steps; windowed decrease (m = {}): {}; instantaneous monotone: {} ({} increases)",
        trace.len(),
        e.window_m,
        e.windowed_decrease_ok,
        e.instantaneous_monotone_ok,
        e.increase_count
    ));
    if let Some(reason) = &trace.truncated {
        ctx.output.summary.push(format!("trace truncated: {reason}"));
    }
    Ok(())
}

fn lti(mut ctx: Context) -> Result<RunOutput, CliError> {
    let s = &ctx.settings;
    let dim: usize = s.get("dim")?;
    let a = match s.raw("a") {
        Some(text) => {
            let rows = parse_matrix(text).map_err(|e| CliError::Config(format!("setting `a`: {e}")))?;
            let m = Matrix::from_rows(&rows).map_err(|e| CliError::Config(format!("setting `a`: {e}")))?;
            if s.is_explicit("dim") && m.rows() != dim {
                return Err(CliError::Config(format!(
                    "`a` is {}×{} but dim = {dim}",
                    m.rows(),
                    m.cols()
                )));
            }
            HurwitzSource::Matrix(m)
        }
        None => HurwitzSource::Random {
            seed: ctx.manifest.seed,
        },
    };
    let dim = match &a {
        HurwitzSource::Matrix(m) => m.rows(),
        HurwitzSource::Random { .. } => dim,
    };
    let config = LtiConfig {
        dim,
        a,
        theta0: s.vector("theta0")?.unwrap_or_else(|| vec![1.0; dim]),
        dt: s.get("dt")?,
        t_end: s.get("t_end")?,
        window_m: s.get("m")?,
    };
    let run = run_lti(&config)?;
    write_trace_outputs(&mut ctx, &run.trace, "t")?;
    let pairs: Vec<PairRecord> = run.trace.pairs.iter().map(PairRecord::from).collect();
    let text = write_pairs(ctx.manifest.format, &ctx.header, &pairs)?;
    let p = ctx.path("pairs");
    ctx.write(p, &text)?;
    let system = json!({
        "header": ctx.header,
        "a": run.a,
        "p": run.p,
        "lyapunov_residual": run.lyapunov_residual,
        "max_reconstruction_residual": run.reconstruction_residuals.iter().copied().fold(0.0, f64::max),
        "truncated": run.trace.truncated,
    });
    let p = ctx.manifest.output_dir.join("system.json");
    ctx.write(p, &pretty(&system)?)?;
    ctx.output
        .summary
        .insert(0, format!("Lyapunov residual {:.3e}", run.lyapunov_residual));
    Ok(ctx.finish())
}

fn fa(mut ctx: Context) -> Result<RunOutput, CliError> {
    let s = &ctx.settings;
    let dataset = match s.get::<String>("dataset")?.as_str() {
        "synthetic" => DatasetSpec::Synthetic {
            classes: s.get("classes")?,
            samples_per_class: s.get("samples_per_class")?,
            cluster_spread: s.get("cluster_spread")?,
        },
        "digits" => DatasetSpec::EmbeddedDigits,
        path => DatasetSpec::File(PathBuf::from(path)),
    };
    let (default_in, default_out) = match &dataset {
        DatasetSpec::Synthetic { classes, .. } => (64, *classes),
        DatasetSpec::EmbeddedDigits => (64, 10),
        DatasetSpec::File(p) => {
            let bytes = std::fs::read(p).map_err(|e| CliError::Input(format!("dataset {}: {e}", p.display())))?;
            let d = parse_labeled_dataset(&bytes)?;
            (d.dims, d.classes)
        }
    };
    let batch_size = match s.get::<String>("batch_size")?.as_str() {
        "full" => None,
        b => Some(
            b.parse()
                .map_err(|_| CliError::Config(format!("batch_size: `{b}` is not a size or 'full'")))?,
        ),
    };
    let feedback = match s.get::<String>("feedback")?.as_str() {
        "fixed" => FeedbackMode::Fixed,
        "transpose" => FeedbackMode::Transpose,
        other => {
            return Err(CliError::Config(format!(
                "feedback: unknown mode `{other}` (fixed, transpose)"
            )))
        }
    };
    let config = FaConfig {
        seed: ctx.manifest.seed,
        input_dim: s.opt("input_dim")?.unwrap_or(default_in),
        hidden_dim: s.get("hidden_dim")?,
        output_dim: s.opt("output_dim")?.unwrap_or(default_out),
        dataset,
        learning_rate: s.get("learning_rate")?,
        steps: s.get("steps")?,
        window_m: s.get("m")?,
        batch_size,
        tanh: s.flag("tanh")?,
        feedback,
    };
    let run = run_feedback_alignment(&config)?;
    ctx.output.summary.push(format!(
        "{} parameters, {} training samples",
        config.param_count(),
        run.samples
    ));
    write_trace_outputs(&mut ctx, &run.trace, "step")?;
    Ok(ctx.finish())
}

fn pretty(v: &Value) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(natgrad_lens::io::IoError::from)?;
    s.push('\n');
    Ok(s)
}

fn summary_text(format: OutputFormat, header: &Header, entries: &[(&str, Value)]) -> Result<String, CliError> {
    match format {
        OutputFormat::Json => {
            let values: serde_json::Map<String, Value> =
                entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
            pretty(&json!({ "header": header, "values": values }))
        }
        OutputFormat::Csv => {
            let cols = vec!["key".to_string(), "value".to_string()];
            let rows = entries.iter().map(|(k, v)| {
                let v = match v {
                    Value::Number(n) if n.is_f64() => n.as_f64().map(fmt_f64).unwrap_or_default(),
                    Value::String(s) => s.clone(),
                    Value::Null => String::new(),
                    other => other.to_string(),
                };
                vec![k.to_string(), v]
            });
            Ok(write_csv_table(header, &cols, rows))
        }
    }
}

/// Non-finite values become strings so that `inf` survives JSON.
fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or_else(|| Value::String(v.to_string()), Value::Number)
}

fn discrete(mut ctx: Context) -> Result<RunOutput, CliError> {
    let s = &ctx.settings;
    let dim: usize = s.get("dim")?;
    let oracle = LossRegistry::with_builtins().create(&s.get::<String>("loss")?, dim)?;
    let rule = RuleRegistry::with_builtins().create(&s.get::<String>("rule")?, s.opt("rule_param")?)?;
    let theta0 = s.vector("theta0")?.unwrap_or_else(|| vec![0.1; dim]);
    if theta0.len() != dim {
        return Err(CliError::Config(format!(
            "theta0 has {} entries, expected {dim}",
            theta0.len()
        )));
    }
    let fraction: f64 = s.get("fraction")?;
    let c = certified_step(oracle.as_ref(), rule.as_ref(), &theta0, s.get("eta")?, fraction)?;
    let ng_residual = if c.combined.is_pd {
        Some(natural_gradient_step_residual(
            &c.combined,
            &c.step,
            &oracle.gradient(&theta0),
        )?)
    } else {
        None
    };
    let probe_etas = s.vector("probe_etas")?.unwrap_or_default();
    let probe = continuum_limit_probe(oracle.as_ref(), &theta0, rule.as_ref(), &probe_etas)?;

    let mut entries: Vec<(&str, Value)> = vec![
        ("loss", json!(oracle.name())),
        ("rule", json!(rule.name())),
        ("dim", json!(dim)),
        ("eta", num(c.step.eta())),
        ("fraction", num(fraction)),
        ("iterations", json!(c.iterations)),
        ("loss_before", num(c.gradient.loss_before)),
        ("loss_after", num(c.gradient.loss_after)),
        ("lambda_taylor", num(c.gradient.lambda_taylor)),
        ("taylor_residual", num(c.gradient.taylor_residual)),
        ("defining_residual", num(c.gradient.defining_residual)),
        ("psi_bar", num(c.gradient.psi_bar)),
        ("h", num(c.bound.h)),
        ("bound_formula", num(c.bound.formula)),
        ("bound_certified", num(c.bound.certified)),
        ("m_bar_min_eigenvalue", num(c.m_bar.certificates().min_eigenvalue)),
        ("combined_is_pd", json!(c.combined.is_pd)),
        ("combined_min_eigenvalue", num(c.combined.min_eigenvalue)),
        (
            "combined_reconstruction_residual",
            c.combined.reconstruction_residual.map_or(Value::Null, num),
        ),
        ("natural_gradient_residual", ng_residual.map_or(Value::Null, num)),
        ("probe_slope", probe.slope.map_or(Value::Null, num)),
    ];

    let samples: usize = s.get("samples")?;
    if samples > 0 {
        let sigma: f64 = s.get("sigma")?;
        let mut rng = seeded_rng(ctx.manifest.seed);
        let grad = oracle.gradient(&theta0);
        let mut draws = Vec::with_capacity(samples);
        for _ in 0..samples {
            let g: Vec<f64> = grad
                .iter()
                .map(|v| -v + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            draws.push(stochastic_sample(oracle.as_ref(), &theta0, g, c.step.eta())?);
        }
        let st = stochastic_average_metric(&draws, c.step.eta())?;
        let recon = st.reconstruction_against(&grad).ok();
        entries.push(("stochastic_samples", json!(samples)));
        entries.push(("stochastic_is_pd", json!(st.is_pd)));
        entries.push(("stochastic_used_correction", json!(st.used_correction)));
        entries.push(("stochastic_min_eigenvalue", num(st.min_eigenvalue)));
        entries.push(("stochastic_reconstruction_residual", recon.map_or(Value::Null, num)));
    }

    let text = summary_text(ctx.manifest.format, &ctx.header, &entries)?;
    let p = ctx.path("discrete");
    ctx.write(p, &text)?;

    let cols: Vec<String> = [
        "eta",
        "effective",
        "y_bar_error",
        "eta_hg_norm",
        "metric_gap",
        "m_bar_lambda_min",
        "m_bar_lambda_max",
    ]
    .iter()
    .map(|c| c.to_string())
    .collect();
    let text = match ctx.manifest.format {
        OutputFormat::Csv => write_csv_table(
            &ctx.header,
            &cols,
            probe.rows.iter().map(|r| {
                let ok = |v: f64| fmt_opt(r.effective.then_some(v));
                vec![
                    fmt_f64(r.eta),
                    r.effective.to_string(),
                    ok(r.y_bar_error),
                    ok(r.eta_hg_norm),
                    ok(r.metric_gap),
                    fmt_opt(r.spectrum.first().copied()),
                    fmt_opt(r.spectrum.last().copied()),
                ]
            }),
        ),
        OutputFormat::Json => pretty(
            &json!({ "header": ctx.header, "metric_scale": probe.metric_scale, "slope": probe.slope, "rows": probe.rows }),
        )?,
    };
    let p = ctx.path("continuum_probe");
    ctx.write(p, &text)?;
    if ctx.svg_enabled()? {
        let pts = |f: fn(&natgrad_lens::discrete::ProbeRow) -> f64| -> Vec<(f64, f64)> {
            probe
                .rows
                .iter()
                .filter(|r| r.effective)
                .map(|r| (r.eta, f(r)))
                .collect()
        };
        let svg = line_chart_svg(
            "continuum limit",
            "η",
            &[
                Series {
                    name: "‖ȳ − y‖".into(),
                    points: pts(|r| r.y_bar_error),
                },
                Series {
                    name: "‖ηHg‖".into(),
                    points: pts(|r| r.eta_hg_norm),
                },
            ],
        );
        let p = ctx.manifest.output_dir.join("continuum_probe.svg");
        ctx.write(p, &svg)?;
    }
    ctx.output.summary.push(format!(
        "η = {:.6} after {} iterations; combined metric positive definite: {}",
        c.step.eta(),
        c.iterations,
        c.combined.is_pd
    ));
    Ok(ctx.finish())
}

fn effectiveness(mut ctx: Context) -> Result<RunOutput, CliError> {
    let path = input_path(&ctx.settings)?;
    let losses =
        parse_loss_sequence(&read_text(&path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let report = check_effectiveness(&losses, ctx.settings.get("m")?)?;
    let text = write_effectiveness(ctx.manifest.format, &ctx.header, &report)?;
    let p = ctx.path("effectiveness");
    ctx.write(p, &text)?;
    ctx.output.summary.push(format!(
        "{} losses, m = {}: windowed decrease {}, instantaneous monotone {}",
        losses.len(),
        report.window_m,
        report.windowed_decrease_ok,
        report.instantaneous_monotone_ok
    ));
    Ok(ctx.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn common(out: &std::path::Path) -> CommonArgs {
        CommonArgs {
            out: Some(out.to_path_buf()),
            ..CommonArgs::default()
        }
    }

    #[test]
    fn flags_override_config_file_which_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        std::fs::write(&cfg, "dt = 0.01\nt_end = 0.5\nseed = 7\n").unwrap();
        let mut c = common(dir.path());
        c.config = Some(cfg);
        c.seed = Some(9);
        let out = dispatch(&Command::Lti {
            common: c,
            dim: None,
            a: None,
            theta0: None,
            dt: None,
            t_end: Some(0.2),
        })
        .unwrap();
        let m = out.manifest.unwrap();
        assert_eq!(m.seed, 9);
        assert_eq!(m.settings["dt"], "0.01");
        assert_eq!(m.settings["t_end"], "0.2");
        assert_eq!(m.settings["dim"], "2");
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        std::fs::write(&cfg, "learning_rate = 0.1\n").unwrap();
        let mut c = common(dir.path());
        c.config = Some(cfg);
        let err = dispatch(&Command::Effectiveness { common: c, input: None }).unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
    }

    #[test]
    fn gamma_selects_the_family_strategy() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("pairs.json");
        let records = vec![PairRecord::new(vec![1.0, 0.0, 0.0], vec![1.0, 0.5, 0.0])];
        std::fs::write(
            &input,
            write_pairs(OutputFormat::Json, &Header::new(), &records).unwrap(),
        )
        .unwrap();
        let mut c = common(dir.path());
        c.gamma = Some(4.0);
        c.format = Some("json".into());
        let out = dispatch(&Command::Analyze {
            common: c,
            input: Some(input),
            metric: None,
        })
        .unwrap();
        let text = std::fs::read_to_string(&out.files[0]).unwrap();
        let (_, rows) = natgrad_lens::io::parse_spectrum_rows(OutputFormat::Json, &text).unwrap();
        assert_eq!(rows[0].gamma, Some(4.0));
    }

    #[test]
    fn flags_for_other_commands_are_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = common(dir.path());
        c.gamma = Some(2.0);
        assert!(dispatch(&Command::Effectiveness { common: c, input: None }).is_err());
    }

    #[test]
    fn lti_with_explicit_matrix_and_json_output() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = common(dir.path());
        c.format = Some("json".into());
        let out = dispatch(&Command::Lti {
            common: c,
            dim: None,
            a: Some("-1,0.5;0,-2".into()),
            theta0: Some("1,-1".into()),
            dt: Some(0.01),
            t_end: Some(1.0),
        })
        .unwrap();
        let names: Vec<String> = out
            .files
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, ["trace.json", "effectiveness.json", "pairs.json", "system.json"]);
        let system: Value = serde_json::from_str(&std::fs::read_to_string(&out.files[3]).unwrap()).unwrap();
        assert!(system["lyapunov_residual"].as_f64().unwrap() < 1e-12);
    }

    #[test]
    fn discrete_summary_reports_certified_step() {
        let dir = tempfile::tempdir().unwrap();
        let out = dispatch(&Command::Discrete {
            common: common(dir.path()),
            loss: Some("rosenbrock".into()),
            rule: None,
            rule_param: None,
            dim: None,
            theta0: Some("-0.5,0.8".into()),
            eta: Some(1e-3),
            fraction: None,
            samples: Some(50),
            sigma: None,
        })
        .unwrap();
        let text = std::fs::read_to_string(&out.files[0]).unwrap();
        assert!(text.contains("combined_is_pd,true"), "{text}");
        assert!(text.contains("stochastic_samples,50"));
    }

    #[test]
    fn effectiveness_requires_input() {
        let dir = tempfile::tempdir().unwrap();
        let err = dispatch(&Command::Effectiveness {
            common: common(dir.path()),
            input: None,
        })
        .unwrap_err();
        assert!(err.to_string().contains("input"));
    }
}
