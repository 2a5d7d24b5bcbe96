use std::path::{Path, PathBuf};

use bvlab::distortion::fmt_real;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
    Flag(bool),
}

impl Cell {
    fn csv_field(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Real(x) => fmt_real(*x),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Ordered columns of one output series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, Failure> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| Failure::config(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_field)).map_err(io)?;
        }
        w.into_inner().map_err(|e| Failure::config(format!("csv: {e}")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    /// Every row carries its own `certified` column; this is their conjunction.
    pub converged: bool,
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub series: Table,
    pub csv_file: String,
    pub wall_clock_s: f64,
}

/// SHA-256 of the effective configuration, serialized field by field.
pub fn config_hash<T: Serialize>(cfg: &T, seed: Option<u64>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(cfg).expect("configs serialize"));
    if let Some(s) = seed {
        h.update(s.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
pub fn write_outputs(dir: &Path, record: &ResultRecord) -> Result<(PathBuf, PathBuf), Failure> {
    std::fs::create_dir_all(dir).map_err(Failure::io)?;
    let stem = sanitize(&record.experiment);
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&csv_path, record.series.to_csv()?).map_err(Failure::io)?;
    let json = serde_json::to_vec_pretty(record).map_err(|e| Failure::config(format!("json: {e}")))?;
    std::fs::write(&json_path, json).map_err(Failure::io)?;
    Ok((csv_path, json_path))
}

pub fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "result".into()
    } else {
        s
    }
}
