//! Experiment reports: tables, pass/fail checks and deterministic emission.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Int(v) => Some(v as f64),
            Cell::Num(v) => Some(v),
            Cell::Text(_) => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column (`None` for text cells).
    pub fn values(&self, name: &str) -> Vec<Option<f64>> {
        match self.column(name) {
            Some(i) => self.rows.iter().map(|r| r[i].as_f64()).collect(),
            None => Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| Error::Config(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Parses CSV written by [`Table::to_csv`]; integers, reals and text are
    /// told apart by parsing.
    pub fn from_csv(name: &str, text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let err = |e: csv::Error| Error::Config(format!("csv: {e}"));
        let columns = r.headers().map_err(err)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(err)?;
            rows.push(
                rec.iter()
                    .map(|f| {
                        if let Ok(i) = f.parse::<i64>() {
                            Cell::Int(i)
                        } else if let Ok(x) = f.parse::<f64>() {
                            Cell::Num(x)
                        } else {
                            Cell::Text(f.to_string())
                        }
                    })
                    .collect(),
            );
        }
        Ok(Self {
            name: name.to_string(),
            columns,
            rows,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub rho: f64,
    /// Finest time step used, when one applies.
    pub dt: Option<f64>,
    pub crate_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_hash: String,
    pub provenance: Provenance,
    pub summary: serde_json::Value,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub tables: Vec<Table>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config_hash: String, seed: u64, rho: f64) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_hash,
            provenance: Provenance {
                seed,
                rho,
                dt: None,
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            summary: serde_json::Value::Null,
            checks: Vec::new(),
            notes: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Hex SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write(path: PathBuf, contents: &[u8]) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `report.json`, one `<table>.csv` per table and `config.echo` into
/// `dir` (created if missing). Returns the written paths.
pub fn emit_report(report: &ExperimentReport, config_echo: &str, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    out.push(write(dir.join("report.json"), format!("{json}\n").as_bytes())?);
    for t in &report.tables {
        out.push(write(dir.join(format!("{}.csv", t.name)), t.to_csv()?.as_bytes())?);
    }
    out.push(write(dir.join("config.echo"), config_echo.as_bytes())?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["n", "x", "label"]);
        t.push(vec![1usize.into(), 0.1.into(), "a,b".into()]);
        t.push(vec![2usize.into(), 1e-300.into(), "plain".into()]);
        t.push(vec![3usize.into(), f64::NAN.into(), "".into()]);
        t
    }

    #[test]
    fn csv_roundtrip() {
        let t = sample();
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("n,x,label\n1,0.1,\"a,b\"\n"));
        let back = Table::from_csv("demo", &text).unwrap();
        assert_eq!(back.rows[..2], t.rows[..2]);
        assert!(back.rows[2][1].as_f64().unwrap().is_nan());
    }

    #[test]
    fn hash_is_sha256() {
        assert_eq!(
            config_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn empty_report_has_hash() {
        let dir = tempfile::tempdir().unwrap();
        let r = ExperimentReport::new("none", config_hash(""), 0, 0.1);
        let files = emit_report(&r, "", dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json["config_hash"], config_hash(""));
    }

    #[test]
    fn io_error_has_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let r = ExperimentReport::new("none", String::new(), 0, 0.1);
        let err = emit_report(&r, "", &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"));
    }
}
