//! CSV/JSON artifacts and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::CliError;

/// 17 significant digits, '.' decimal.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub struct Csv {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(path: PathBuf, header: &[&str]) -> Self {
        Self {
            path,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.header.len());
        self.rows.push(fields);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(self) -> Result<PathBuf, CliError> {
        let mut w = csv::Writer::from_path(&self.path).map_err(|e| CliError::io(&self.path, e))?;
        w.write_record(&self.header).map_err(|e| CliError::io(&self.path, e))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| CliError::io(&self.path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

pub fn write_json(path: PathBuf, value: &impl Serialize) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Full config echo, version, timing and the list of data files.
#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub config: &'a RunConfig,
    /// Values the run derived from defaults (grid, run length, …).
    pub derived: Value,
    pub outputs: Vec<String>,
    pub summary: Value,
    pub wall_time_s: f64,
    pub timestamp_unix: u64,
}

pub fn write_manifest(
    cfg: &RunConfig,
    subcommand: &'static str,
    derived: Value,
    outputs: &[PathBuf],
    summary: Value,
    wall: Duration,
) -> Result<PathBuf, CliError> {
    let m = Manifest {
        tool: "defectlab",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        config: cfg,
        derived,
        outputs: outputs
            .iter()
            .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
            .collect(),
        summary,
        wall_time_s: wall.as_secs_f64(),
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    write_json(cfg.output_dir.join("manifest.json"), &m)
}
