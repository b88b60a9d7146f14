//! File formats: pair files, spectrum tables, trajectory traces,
//! effectiveness reports and flat key-value configs.
//!
//! CSV outputs start with `# key=value` comment lines that echo the run
//! header (seed, configuration), followed by a column header. Doubles are
//! written with 17 significant digits so every value re-parses to the same
//! bits. JSON outputs are `{"header": {...}, "rows": [...]}`.

mod config;
mod pairs;
mod records;
mod svg;

pub use config::{parse_key_values, KeyValues};
pub use pairs::{
    parse_pairs, parse_pairs_csv, parse_pairs_json, write_pairs, write_pairs_csv, write_pairs_json, PairRecord,
};
pub use records::{
    parse_effectiveness, parse_loss_sequence, parse_spectrum_rows, parse_trace_rows, spectrum_row, trace_rows,
    write_effectiveness, write_spectrum_rows, write_trace_rows, RowStatus, SpectrumRow, TraceRow,
};
pub use svg::{line_chart_svg, Series};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Run metadata echoed into every output file.
pub type Header = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("{0}")]
    Format(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }

    /// Format implied by a file name, if any.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension().and_then(|e| e.to_str()).and_then(|e| e.parse().ok())
    }
}

impl FromStr for OutputFormat {
    type Err = IoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(IoError::Format(format!(
                "unknown format `{other}` (expected csv or json)"
            ))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub header: Header,
    pub rows: Vec<T>,
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes `contents` to a temporary file next to `path` and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let file_err = |source| IoError::File {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(file_err)?;
    tmp.write_all(contents).map_err(file_err)?;
    tmp.as_file().sync_all().map_err(file_err)?;
    tmp.persist(path).map_err(|e| file_err(e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// CSV text: `# key=value` header lines, a column row, then the rows.
pub fn write_csv_table(header: &Header, columns: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    for (k, v) in header {
        out.push_str(&format!("# {k}={}\n", v.replace('\n', " ")));
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields"));
    out
}

/// Parsed CSV table: echoed header, column names, and records with their
/// line numbers.
struct Table {
    header: Header,
    columns: Vec<String>,
    records: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn parse(text: &str) -> Result<Self, IoError> {
        let mut header = Header::new();
        for line in text.lines() {
            let Some(rest) = line.trim_start().strip_prefix('#') else {
                continue;
            };
            if let Some((k, v)) = rest.trim().split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let columns: Vec<String> = r
            .headers()
            .map_err(|e| csv_error(&e))?
            .iter()
            .map(str::to_string)
            .collect();
        if columns.iter().all(String::is_empty) {
            return Err(IoError::Parse {
                line: 1,
                message: "missing column header".into(),
            });
        }
        let mut records = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| csv_error(&e))?;
            let line = rec.position().map_or(0, |p| p.line());
            records.push((line, rec));
        }
        Ok(Self {
            header,
            columns,
            records,
        })
    }

    fn column(&self, name: &str) -> Result<usize, IoError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| IoError::Parse {
                line: 1,
                message: format!("missing column `{name}`"),
            })
    }
}

fn csv_error(e: &csv::Error) -> IoError {
    let line = e.position().map_or(0, |p| p.line());
    IoError::Parse {
        line,
        message: e.to_string(),
    }
}

fn field(rec: &csv::StringRecord, line: u64, idx: usize) -> Result<&str, IoError> {
    rec.get(idx).ok_or_else(|| IoError::Parse {
        line,
        message: format!("missing field {}", idx + 1),
    })
}

fn parse_f64(s: &str, line: u64, what: &str) -> Result<f64, IoError> {
    s.parse::<f64>().map_err(|_| IoError::Parse {
        line,
        message: format!("{what}: `{s}` is not a number"),
    })
}

fn parse_opt_f64(s: &str, line: u64, what: &str) -> Result<Option<f64>, IoError> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, line, what).map(Some)
    }
}

fn parse_usize(s: &str, line: u64, what: &str) -> Result<usize, IoError> {
    s.parse::<usize>().map_err(|_| IoError::Parse {
        line,
        message: format!("{what}: `{s}` is not a non-negative integer"),
    })
}

fn to_json<T: Serialize>(header: &Header, rows: &[T]) -> Result<String, IoError> {
    #[derive(Serialize)]
    struct Borrowed<'a, T> {
        header: &'a Header,
        rows: &'a [T],
    }
    let mut s = serde_json::to_string_pretty(&Borrowed { header, rows })?;
    s.push('\n');
    Ok(s)
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Document<T>, IoError> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 5e-324] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn formats_parse() {
        assert_eq!("CSV".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
        assert_eq!(OutputFormat::from_path(Path::new("a/b.json")), Some(OutputFormat::Json));
    }
}
