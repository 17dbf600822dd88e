//! Deterministic CSV and JSON output.
//!
//! CSV files hold one header row and one row per sample, numbers written
//! with 17 significant digits in scientific notation and LF line endings;
//! the metadata goes to a `<stem>.meta.json` sidecar. JSON files hold a
//! `metadata` block and the report itself. Nothing time- or
//! machine-dependent is written, so equal inputs give equal bytes.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Thresholds};
use crate::error::{Error, Result};
use crate::evolution::{ComparisonReport, ObservableSeries};
use crate::params::EffVariant;

pub const TOOL_NAME: &str = "mirrorfield";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!(
                "unknown output format `{other}`; expected `csv` or `json`"
            ))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Everything needed to reproduce an output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub field_dim: usize,
    pub mirror_dim: usize,
    pub total_dim: usize,
    pub variant: EffVariant,
    pub thresholds: Thresholds,
    pub config: RunConfig,
}

impl Metadata {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let layout = config.layout();
        Metadata {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            field_dim: layout.field_dim(),
            mirror_dim: layout.mirror_dim(),
            total_dim: layout.total_dim(),
            variant: config.run.variant,
            thresholds: config.thresholds,
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_number(*x),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// A report with a fixed CSV column set.
pub trait Tabular {
    fn columns(&self) -> Vec<String>;
    fn rows(&self) -> Vec<Vec<Cell>>;
}

pub fn render_csv(table: &impl Tabular) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io {
        path: "<csv buffer>".into(),
        source: std::io::Error::other(e),
    };
    w.write_record(table.columns()).map_err(csv_err)?;
    for row in table.rows() {
        w.write_record(row.iter().map(Cell::render))
            .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io {
        path: "<csv buffer>".into(),
        source: e.into_error(),
    })
}

#[derive(Serialize)]
struct Document<'a, T> {
    metadata: &'a Metadata,
    data: &'a T,
}

pub fn render_json<T: Serialize>(data: &T, metadata: &Metadata) -> Result<Vec<u8>> {
    let mut bytes =
        serde_json::to_vec_pretty(&Document { metadata, data }).map_err(|e| Error::Io {
            path: "<json buffer>".into(),
            source: e.into(),
        })?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Writes a report as `<dir>/<stem>.csv` plus `<stem>.meta.json`, or as
/// `<dir>/<stem>.json`. Returns the paths written.
pub fn write_report<T: Serialize + Tabular>(
    data: &T,
    dir: &Path,
    stem: &str,
    format: Format,
    metadata: &Metadata,
) -> Result<Vec<PathBuf>> {
    match format {
        Format::Csv => {
            let csv_path = dir.join(format!("{stem}.csv"));
            let meta_path = dir.join(format!("{stem}.meta.json"));
            write_atomic(&csv_path, &render_csv(data)?)?;
            let mut meta = serde_json::to_vec_pretty(metadata).map_err(|e| Error::Io {
                path: meta_path.display().to_string(),
                source: e.into(),
            })?;
            meta.push(b'\n');
            write_atomic(&meta_path, &meta)?;
            Ok(vec![csv_path, meta_path])
        }
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            write_atomic(&path, &render_json(data, metadata)?)?;
            Ok(vec![path])
        }
    }
}

fn names(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

impl Tabular for ObservableSeries {
    fn columns(&self) -> Vec<String> {
        names(&[
            "t",
            "inversion",
            "photon",
            "phonon",
            "quadrature",
            "leakage",
            "energy",
        ])
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        (0..self.len())
            .map(|k| {
                [
                    self.times[k],
                    self.inversion[k],
                    self.photon[k],
                    self.phonon[k],
                    self.quadrature[k],
                    self.leakage[k],
                    self.energy[k],
                ]
                .map(Cell::Num)
                .to_vec()
            })
            .collect()
    }
}

impl Tabular for ComparisonReport {
    fn columns(&self) -> Vec<String> {
        names(&["t", "fidelity", "operator_distance"])
    }

    fn rows(&self) -> Vec<Vec<Cell>> {
        (0..self.times.len())
            .map(|k| {
                vec![
                    Cell::Num(self.times[k]),
                    Cell::Num(self.fidelity[k]),
                    self.operator_distance
                        .as_ref()
                        .map_or(Cell::Empty, |d| Cell::Num(d[k])),
                ]
            })
            .collect()
    }
}
