use serde::{Deserialize, Serialize};

use super::{
    field, fmt_f64, fmt_opt, from_json, parse_f64, parse_opt_f64, parse_usize, to_json, write_csv_table, Header,
    IoError, OutputFormat, PairRecord, Table,
};
use crate::experiments::{EffectivenessReport, TrajectoryTrace};
use crate::metric::MetricStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    /// No valid metric: the pair is not aligned or not a valid pair at all.
    Degenerate,
}

impl RowStatus {
    fn as_str(self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Degenerate => "degenerate",
        }
    }

    fn parse(s: &str, line: u64) -> Result<Self, IoError> {
        match s {
            "ok" => Ok(Self::Ok),
            "degenerate" => Ok(Self::Degenerate),
            other => Err(IoError::Parse {
                line,
                message: format!("unknown status `{other}`"),
            }),
        }
    }
}

/// One analyzed pair. Degenerate rows carry only `psi` (when the angle is
/// defined) and a reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub status: RowStatus,
    pub dim: usize,
    pub psi: Option<f64>,
    pub norm_ratio: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_bulk: Option<f64>,
    pub kappa: Option<f64>,
    pub reason: String,
}

/// Spectrum of the metric chosen by `strategy`, or a degenerate row.
pub fn spectrum_row(index: usize, record: &PairRecord, strategy: &dyn MetricStrategy) -> SpectrumRow {
    let degenerate = |psi: Option<f64>, reason: String| SpectrumRow {
        index,
        status: RowStatus::Degenerate,
        dim: record.dim,
        psi,
        norm_ratio: None,
        gamma: None,
        lambda_max: None,
        lambda_min: None,
        lambda_bulk: None,
        kappa: None,
        reason,
    };
    let pair = match record.to_pair() {
        Ok(p) => p,
        Err(e) => return degenerate(None, e.to_string()),
    };
    match strategy.spectrum(&pair) {
        Ok(s) => SpectrumRow {
            index,
            status: RowStatus::Ok,
            dim: record.dim,
            psi: Some(s.psi),
            norm_ratio: Some(s.norm_ratio),
            gamma: strategy.gamma(&pair),
            lambda_max: Some(s.lambda_max),
            lambda_min: Some(s.lambda_min),
            lambda_bulk: s.lambda_bulk,
            kappa: Some(s.kappa),
            reason: String::new(),
        },
        Err(e) => degenerate(Some(pair.psi()), e.to_string()),
    }
}

const SPECTRUM_COLUMNS: [&str; 11] = [
    "index",
    "status",
    "dim",
    "psi",
    "norm_ratio",
    "gamma",
    "lambda_max",
    "lambda_min",
    "lambda_bulk",
    "kappa",
    "reason",
];

pub fn write_spectrum_rows(format: OutputFormat, header: &Header, rows: &[SpectrumRow]) -> Result<String, IoError> {
    match format {
        OutputFormat::Json => to_json(header, rows),
        OutputFormat::Csv => {
            let cols: Vec<String> = SPECTRUM_COLUMNS.iter().map(|s| s.to_string()).collect();
            Ok(write_csv_table(
                header,
                &cols,
                rows.iter().map(|r| {
                    vec![
                        r.index.to_string(),
                        r.status.as_str().to_string(),
                        r.dim.to_string(),
                        fmt_opt(r.psi),
                        fmt_opt(r.norm_ratio),
                        fmt_opt(r.gamma),
                        fmt_opt(r.lambda_max),
                        fmt_opt(r.lambda_min),
                        fmt_opt(r.lambda_bulk),
                        fmt_opt(r.kappa),
                        r.reason.clone(),
                    ]
                }),
            ))
        }
    }
}

pub fn parse_spectrum_rows(format: OutputFormat, text: &str) -> Result<(Header, Vec<SpectrumRow>), IoError> {
    if format == OutputFormat::Json {
        let d = from_json::<SpectrumRow>(text)?;
        return Ok((d.header, d.rows));
    }
    let t = Table::parse(text)?;
    let idx: Vec<usize> = SPECTRUM_COLUMNS.iter().map(|c| t.column(c)).collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(t.records.len());
    for (line, rec) in &t.records {
        let line = *line;
        let f = |k: usize| field(rec, line, idx[k]);
        rows.push(SpectrumRow {
            index: parse_usize(f(0)?, line, "index")?,
            status: RowStatus::parse(f(1)?, line)?,
            dim: parse_usize(f(2)?, line, "dim")?,
            psi: parse_opt_f64(f(3)?, line, "psi")?,
            norm_ratio: parse_opt_f64(f(4)?, line, "norm_ratio")?,
            gamma: parse_opt_f64(f(5)?, line, "gamma")?,
            lambda_max: parse_opt_f64(f(6)?, line, "lambda_max")?,
            lambda_min: parse_opt_f64(f(7)?, line, "lambda_min")?,
            lambda_bulk: parse_opt_f64(f(8)?, line, "lambda_bulk")?,
            kappa: parse_opt_f64(f(9)?, line, "kappa")?,
            reason: f(10)?.to_string(),
        });
    }
    Ok((t.header, rows))
}

/// One step of a trajectory trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub time: f64,
    pub loss: f64,
    pub status: RowStatus,
    pub psi: f64,
    pub norm_ratio: f64,
    /// `yᵀg`
    pub alignment: f64,
    pub lambda_max: Option<f64>,
    pub lambda_min: Option<f64>,
    pub lambda_bulk: Option<f64>,
    pub kappa: Option<f64>,
    pub map_residual: Option<f64>,
}

pub fn trace_rows(trace: &TrajectoryTrace) -> Vec<TraceRow> {
    (0..trace.len())
        .map(|i| {
            let p = &trace.pairs[i];
            let s = trace.spectra[i];
            TraceRow {
                step: i,
                time: trace.times[i],
                loss: trace.losses[i],
                status: if s.is_some() {
                    RowStatus::Ok
                } else {
                    RowStatus::Degenerate
                },
                psi: p.psi(),
                norm_ratio: p.norm_ratio(),
                alignment: p.alignment(),
                lambda_max: s.map(|s| s.lambda_max),
                lambda_min: s.map(|s| s.lambda_min),
                lambda_bulk: s.and_then(|s| s.lambda_bulk),
                kappa: s.map(|s| s.kappa),
                map_residual: trace.map_residuals[i],
            }
        })
        .collect()
}

const TRACE_COLUMNS: [&str; 12] = [
    "step",
    "time",
    "loss",
    "status",
    "psi",
    "norm_ratio",
    "alignment",
    "lambda_max",
    "lambda_min",
    "lambda_bulk",
    "kappa",
    "map_residual",
];

pub fn write_trace_rows(format: OutputFormat, header: &Header, rows: &[TraceRow]) -> Result<String, IoError> {
    match format {
        OutputFormat::Json => to_json(header, rows),
        OutputFormat::Csv => {
            let cols: Vec<String> = TRACE_COLUMNS.iter().map(|s| s.to_string()).collect();
            Ok(write_csv_table(
                header,
                &cols,
                rows.iter().map(|r| {
                    vec![
                        r.step.to_string(),
                        fmt_f64(r.time),
                        fmt_f64(r.loss),
                        r.status.as_str().to_string(),
                        fmt_f64(r.psi),
                        fmt_f64(r.norm_ratio),
                        fmt_f64(r.alignment),
                        fmt_opt(r.lambda_max),
                        fmt_opt(r.lambda_min),
                        fmt_opt(r.lambda_bulk),
                        fmt_opt(r.kappa),
                        fmt_opt(r.map_residual),
                    ]
                }),
            ))
        }
    }
}

pub fn parse_trace_rows(format: OutputFormat, text: &str) -> Result<(Header, Vec<TraceRow>), IoError> {
    if format == OutputFormat::Json {
        let d = from_json::<TraceRow>(text)?;
        return Ok((d.header, d.rows));
    }
    let t = Table::parse(text)?;
    let idx: Vec<usize> = TRACE_COLUMNS.iter().map(|c| t.column(c)).collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(t.records.len());
    for (line, rec) in &t.records {
        let line = *line;
        let f = |k: usize| field(rec, line, idx[k]);
        rows.push(TraceRow {
            step: parse_usize(f(0)?, line, "step")?,
            time: parse_f64(f(1)?, line, "time")?,
            loss: parse_f64(f(2)?, line, "loss")?,
            status: RowStatus::parse(f(3)?, line)?,
            psi: parse_f64(f(4)?, line, "psi")?,
            norm_ratio: parse_f64(f(5)?, line, "norm_ratio")?,
            alignment: parse_f64(f(6)?, line, "alignment")?,
            lambda_max: parse_opt_f64(f(7)?, line, "lambda_max")?,
            lambda_min: parse_opt_f64(f(8)?, line, "lambda_min")?,
            lambda_bulk: parse_opt_f64(f(9)?, line, "lambda_bulk")?,
            kappa: parse_opt_f64(f(10)?, line, "kappa")?,
            map_residual: parse_opt_f64(f(11)?, line, "map_residual")?,
        });
    }
    Ok((t.header, rows))
}

#[derive(Serialize, Deserialize)]
struct ReportDocument {
    header: Header,
    report: EffectivenessReport,
}

pub fn write_effectiveness(
    format: OutputFormat,
    header: &Header,
    report: &EffectivenessReport,
) -> Result<String, IoError> {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&ReportDocument {
                header: header.clone(),
                report: report.clone(),
            })?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let cols = vec!["key".to_string(), "value".to_string()];
            let rows = [
                ("window_m", report.window_m.to_string()),
                ("windowed_decrease_ok", report.windowed_decrease_ok.to_string()),
                ("avg_loss_monotone_ok", report.avg_loss_monotone_ok.to_string()),
                (
                    "instantaneous_monotone_ok",
                    report.instantaneous_monotone_ok.to_string(),
                ),
                ("violation_count", report.violation_count.to_string()),
                ("increase_count", report.increase_count.to_string()),
            ];
            Ok(write_csv_table(
                header,
                &cols,
                rows.into_iter().map(|(k, v)| vec![k.to_string(), v]),
            ))
        }
    }
}

pub fn parse_effectiveness(format: OutputFormat, text: &str) -> Result<(Header, EffectivenessReport), IoError> {
    if format == OutputFormat::Json {
        let d: ReportDocument = serde_json::from_str(text)?;
        return Ok((d.header, d.report));
    }
    let t = Table::parse(text)?;
    let (kc, vc) = (t.column("key")?, t.column("value")?);
    let mut kv = std::collections::BTreeMap::new();
    for (line, rec) in &t.records {
        kv.insert(
            field(rec, *line, kc)?.to_string(),
            (*line, field(rec, *line, vc)?.to_string()),
        );
    }
    let get = |k: &str| {
        kv.get(k)
            .cloned()
            .ok_or_else(|| IoError::Format(format!("report is missing `{k}`")))
    };
    let flag = |k: &str| -> Result<bool, IoError> {
        let (line, v) = get(k)?;
        v.parse().map_err(|_| IoError::Parse {
            line,
            message: format!("{k}: `{v}` is not a boolean"),
        })
    };
    let count = |k: &str| -> Result<usize, IoError> {
        let (line, v) = get(k)?;
        parse_usize(&v, line, k)
    };
    let report = EffectivenessReport {
        window_m: count("window_m")?,
        windowed_decrease_ok: flag("windowed_decrease_ok")?,
        avg_loss_monotone_ok: flag("avg_loss_monotone_ok")?,
        instantaneous_monotone_ok: flag("instantaneous_monotone_ok")?,
        violation_count: count("violation_count")?,
        increase_count: count("increase_count")?,
    };
    Ok((t.header, report))
}

/// A loss sequence: either a table with a `loss` column, or one number per
/// line (the first comma- or whitespace-separated field). `#` lines and
/// blank lines are skipped.
pub fn parse_loss_sequence(text: &str) -> Result<Vec<f64>, IoError> {
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    let Some(first) = first else { return Ok(Vec::new()) };
    if first.split(',').any(|c| c.trim() == "loss") {
        let t = Table::parse(text)?;
        let c = t.column("loss")?;
        return t
            .records
            .iter()
            .map(|(line, rec)| parse_f64(field(rec, *line, c)?, *line, "loss"))
            .collect();
    }
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let tok = l.split(|c: char| c == ',' || c.is_whitespace()).next().unwrap_or("");
        out.push(parse_f64(tok, i as u64 + 1, "loss")?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::strategy::Optimal;

    #[test]
    fn spectrum_rows_round_trip_both_formats() {
        let recs = [
            PairRecord::new(vec![1.0, 0.0], vec![1.0, 0.0]),
            PairRecord::new(vec![1.0, 0.0], vec![0.0, 1.0]),
            PairRecord::new(vec![0.0, 0.0], vec![0.0, 1.0]),
            PairRecord::new(vec![1.0, 2.0], vec![0.3, 1.0 / 7.0]),
        ];
        let rows: Vec<SpectrumRow> = recs
            .iter()
            .enumerate()
            .map(|(i, r)| spectrum_row(i, r, &Optimal))
            .collect();
        assert_eq!(rows[0].status, RowStatus::Ok);
        assert_eq!(rows[0].kappa, Some(1.0));
        assert_eq!(rows[1].status, RowStatus::Degenerate);
        assert!(rows[1].psi.is_some() && rows[1].lambda_max.is_none());
        assert_eq!(rows[2].psi, None);
        let mut h = Header::new();
        h.insert("seed".into(), "1".into());
        for fmt in [OutputFormat::Csv, OutputFormat::Json] {
            let text = write_spectrum_rows(fmt, &h, &rows).unwrap();
            let (h2, back) = parse_spectrum_rows(fmt, &text).unwrap();
            assert_eq!(back, rows);
            assert_eq!(h2, h);
        }
    }

    #[test]
    fn effectiveness_round_trip() {
        let r = crate::experiments::check_effectiveness(&[1.0, 1.2, 0.8, 1.0, 0.6, 0.8, 0.4], 2).unwrap();
        for fmt in [OutputFormat::Csv, OutputFormat::Json] {
            let text = write_effectiveness(fmt, &Header::new(), &r).unwrap();
            assert_eq!(parse_effectiveness(fmt, &text).unwrap().1, r);
        }
    }

    #[test]
    fn loss_sequences() {
        assert_eq!(
            parse_loss_sequence("# x\n1.0\n0.5 extra\n\n0.25,3\n").unwrap(),
            vec![1.0, 0.5, 0.25]
        );
        assert_eq!(
            parse_loss_sequence("step,loss\n0,2.0\n1,1.5\n").unwrap(),
            vec![2.0, 1.5]
        );
        assert!(matches!(
            parse_loss_sequence("1.0\nx\n"),
            Err(IoError::Parse { line: 2, .. })
        ));
    }
}
