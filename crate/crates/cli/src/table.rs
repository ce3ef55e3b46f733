//! Deterministic table emission: CSV with 17-significant-digit reals plus a
//! JSON sidecar echoing the resolved scenario, build string, and metric
//! summary. Writes are atomic (temp file + rename).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::scenario::Scenario;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("table shape error: {0}")]
    Shape(String),
    #[error("JSON encoding error: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TableError + '_ {
    move |source| TableError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_real(*v),
            Cell::Text(v) => v.clone(),
        }
    }
}

/// 17 significant digits; zero prints as a bare "0" (never "-0").
pub fn format_real(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Named columns plus rectangular rows.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    fn render_csv(&self) -> Result<String, TableError> {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(TableError::Shape(format!(
                    "row {i} has {} cells, expected {}",
                    row.len(),
                    self.columns.len()
                )));
            }
            let rendered: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&rendered.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Build and run info echoed alongside every table.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<'a> {
    pub scenario: &'a Scenario,
    pub build: BuildInfo,
    pub run: RunInfo,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildInfo {
    pub git_describe: &'static str,
    pub package_version: &'static str,
}

impl Default for BuildInfo {
    fn default() -> Self {
        BuildInfo {
            git_describe: env!("FRACKIN_GIT_DESCRIBE"),
            package_version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunInfo {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), TableError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

/// Write `<stem>.csv` and `<stem>.json` atomically into `out_dir`; returns
/// the CSV path.
pub fn emit_table(
    table: &Table,
    sidecar: &Sidecar,
    out_dir: &Path,
    stem: &str,
) -> Result<PathBuf, TableError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let json_path = out_dir.join(format!("{stem}.json"));
    write_atomic(&csv_path, table.render_csv()?.as_bytes())?;
    let mut json = serde_json::to_string_pretty(sidecar)?;
    json.push('\n');
    write_atomic(&json_path, json.as_bytes())?;
    Ok(csv_path)
}
