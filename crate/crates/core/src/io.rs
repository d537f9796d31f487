//! Output files: slice series CSV, κ sweep reports and run manifests.
//! Floats are written with 17 significant digits so they read back exactly.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::Record;
use crate::kappa_limit::{ConvergenceReport, KappaErrors};

pub const SERIES_HEADER: &str = "s,sup_u,sup_phi,E0,E1,E2";
pub const KAPPA_HEADER: &str = "kappa,err_rho,err_u,err_phi";
pub const SERIES_FILE: &str = "series.csv";
pub const KAPPA_FILE: &str = "kappa_report.csv";
pub const SLOPE_FILE: &str = "kappa_slopes.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "WKGLAB_OUT";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("no records to write")]
    Empty,
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    fs::write(path, contents).map_err(io_at(path))
}

pub fn series_csv(records: &[Record]) -> Result<String, IoError> {
    if records.is_empty() {
        return Err(IoError::Empty);
    }
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for r in records {
        let cols = [r.time, r.sup_u, r.sup_phi, r.energies[0], r.energies[1], r.energies[2]];
        out.push_str(&cols.map(fmt_float).join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_series(records: &[Record], path: &Path) -> Result<(), IoError> {
    write_file(path, &series_csv(records)?)
}

pub fn parse_series(text: &str) -> Result<Vec<Record>, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SERIES_HEADER => {}
        _ => {
            return Err(IoError::Parse {
                line: 1,
                message: format!("expected header `{SERIES_HEADER}`"),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |message: String| IoError::Parse { line: i + 1, message };
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|e| bad(format!("`{c}`: {e}"))))
            .collect::<Result<_, _>>()?;
        if cols.len() != 6 {
            return Err(bad(format!("expected 6 columns, got {}", cols.len())));
        }
        out.push(Record {
            time: cols[0],
            sup_u: cols[1],
            sup_phi: cols[2],
            energies: [cols[3], cols[4], cols[5]],
        });
    }
    Ok(out)
}

pub fn read_series(path: &Path) -> Result<Vec<Record>, IoError> {
    parse_series(&fs::read_to_string(path).map_err(io_at(path))?)
}

pub fn kappa_report_csv(rows: &[KappaErrors]) -> String {
    let mut out = String::from(KAPPA_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&[r.kappa, r.err_rho, r.err_u, r.err_phi].map(fmt_float).join(","));
        out.push('\n');
    }
    out
}

/// One line: the remainder coefficient and the three fitted slopes.
pub fn slope_summary(report: &ConvergenceReport) -> String {
    let s = |x: Option<f64>| x.map(fmt_float).unwrap_or_else(|| "nan".into());
    format!(
        "q={} slope_rho={} slope_u={} slope_phi={} rho_decreasing={}\n",
        fmt_float(report.q),
        s(report.slope_rho),
        s(report.slope_u),
        s(report.slope_phi),
        report.rho_strictly_decreasing()
    )
}

pub fn write_kappa_report(report: &ConvergenceReport, dir: &Path) -> Result<(), IoError> {
    write_file(&dir.join(KAPPA_FILE), &kappa_report_csv(&report.rows))?;
    write_file(&dir.join(SLOPE_FILE), &slope_summary(report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    Aborted { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outcome: Outcome,
    pub summary: serde_json::Value,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, started_unix: f64) -> Self {
        RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            started_unix,
            finished_unix: started_unix,
            outcome: Outcome::Completed,
            summary: serde_json::Value::Null,
        }
    }

    /// Stamps the finish time and writes `manifest.json` into `dir`.
    pub fn finish(mut self, outcome: Outcome, summary: serde_json::Value, dir: &Path) -> Result<Self, IoError> {
        self.finished_unix = unix_now();
        self.outcome = outcome;
        self.summary = summary;
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        write_file(&dir.join(MANIFEST_FILE), &(text + "\n"))?;
        Ok(self)
    }
}

/// `$WKGLAB_OUT` if set, else `wkglab-out` in the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("wkglab-out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, f64::MIN_POSITIVE] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn empty_series_is_refused() {
        assert!(matches!(series_csv(&[]), Err(IoError::Empty)));
    }

    #[test]
    fn bad_header_is_reported() {
        assert!(matches!(parse_series("t,u\n"), Err(IoError::Parse { line: 1, .. })));
    }
}
