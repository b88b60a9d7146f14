use serde::{Deserialize, Serialize};

use super::{
    field, fmt_f64, from_json, parse_f64, parse_usize, to_json, write_csv_table, Header, IoError, OutputFormat, Table,
};
use crate::metric::UpdateGradientPair;

/// One `(g, y)` row as read from a file, before any validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub dim: usize,
    pub g: Vec<f64>,
    pub y: Vec<f64>,
}

impl PairRecord {
    pub fn new(g: Vec<f64>, y: Vec<f64>) -> Self {
        Self { dim: g.len(), g, y }
    }

    pub fn to_pair(&self) -> Result<UpdateGradientPair, crate::metric::MetricError> {
        UpdateGradientPair::new(self.g.clone(), self.y.clone())
    }
}

impl From<&UpdateGradientPair> for PairRecord {
    fn from(p: &UpdateGradientPair) -> Self {
        Self::new(p.g().to_vec(), p.y().to_vec())
    }
}

fn check_dims(records: &[PairRecord]) -> Result<(), IoError> {
    for (i, r) in records.iter().enumerate() {
        if r.g.len() != r.dim || r.y.len() != r.dim {
            return Err(IoError::Format(format!(
                "pair {i}: dim = {} but |g| = {}, |y| = {}",
                r.dim,
                r.g.len(),
                r.y.len()
            )));
        }
    }
    Ok(())
}

/// CSV with columns `dim,g_0..g_{D-1},y_0..y_{D-1}`. All rows must share
/// one dimension.
pub fn write_pairs_csv(header: &Header, records: &[PairRecord]) -> Result<String, IoError> {
    check_dims(records)?;
    let dim = records.first().map_or(0, |r| r.dim);
    if let Some(r) = records.iter().find(|r| r.dim != dim) {
        return Err(IoError::Format(format!(
            "CSV pair files need one dimension, found {dim} and {}",
            r.dim
        )));
    }
    let mut columns = vec!["dim".to_string()];
    columns.extend((0..dim).map(|i| format!("g_{i}")));
    columns.extend((0..dim).map(|i| format!("y_{i}")));
    let rows = records.iter().map(|r| {
        let mut row = vec![r.dim.to_string()];
        row.extend(r.g.iter().chain(&r.y).map(|v| fmt_f64(*v)));
        row
    });
    Ok(write_csv_table(header, &columns, rows))
}

pub fn parse_pairs_csv(text: &str) -> Result<(Header, Vec<PairRecord>), IoError> {
    let t = Table::parse(text)?;
    let dim_col = t.column("dim")?;
    let dim = t.columns.iter().filter(|c| c.starts_with("g_")).count();
    let g_cols = (0..dim)
        .map(|i| t.column(&format!("g_{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let y_cols = (0..dim)
        .map(|i| t.column(&format!("y_{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(t.records.len());
    for (line, rec) in &t.records {
        let line = *line;
        if rec.len() != t.columns.len() {
            return Err(IoError::Parse {
                line,
                message: format!("expected {} fields, found {}", t.columns.len(), rec.len()),
            });
        }
        let d = parse_usize(field(rec, line, dim_col)?, line, "dim")?;
        if d != dim {
            return Err(IoError::Parse {
                line,
                message: format!("dim = {d} but the header has {dim} components"),
            });
        }
        let g = g_cols
            .iter()
            .map(|&c| parse_f64(field(rec, line, c)?, line, "g"))
            .collect::<Result<_, _>>()?;
        let y = y_cols
            .iter()
            .map(|&c| parse_f64(field(rec, line, c)?, line, "y"))
            .collect::<Result<_, _>>()?;
        out.push(PairRecord { dim, g, y });
    }
    Ok((t.header, out))
}

pub fn write_pairs_json(header: &Header, records: &[PairRecord]) -> Result<String, IoError> {
    check_dims(records)?;
    to_json(header, records)
}

pub fn parse_pairs_json(text: &str) -> Result<(Header, Vec<PairRecord>), IoError> {
    let doc = from_json::<PairRecord>(text)?;
    check_dims(&doc.rows)?;
    Ok((doc.header, doc.rows))
}

pub fn write_pairs(format: OutputFormat, header: &Header, records: &[PairRecord]) -> Result<String, IoError> {
    match format {
        OutputFormat::Csv => write_pairs_csv(header, records),
        OutputFormat::Json => write_pairs_json(header, records),
    }
}

pub fn parse_pairs(format: OutputFormat, text: &str) -> Result<(Header, Vec<PairRecord>), IoError> {
    match format {
        OutputFormat::Csv => parse_pairs_csv(text),
        OutputFormat::Json => parse_pairs_json(text),
    }
}
