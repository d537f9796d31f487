//! Run configuration: sectioned `key = value` text (TOML syntax), parsed
//! strictly. Unknown keys, type mismatches and out-of-range values are
//! reported with the line they occur on.
//!
//! ```toml
//! [model]
//! kind = "wkg"
//! c = 1.0
//!
//! [data]
//! epsilon = 1e-3
//! u0 = { kind = "bump", amplitude = 1.0, radius = 0.9 }
//!
//! [grid]
//! dr = 0.015
//! r_max = 60.0
//!
//! [run]
//! start = 2.0
//! end = 50.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{Mode, SchemeConfig};
use crate::kappa_limit::SweepConfig;
use crate::models::{FrModel, InitialData, ModelError, ModelSystem, Profile, RhoData, WkgModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{}`{key}` out of range: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Range {
        key: String,
        line: Option<usize>,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Parse { line, .. } => Some(*line),
            ConfigError::Range { line, .. } => *line,
            ConfigError::Io { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Wkg,
    Fr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub kind: ModelKind,
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default)]
    pub matter: bool,
    #[serde(default)]
    pub null_coeff: f64,
    #[serde(default)]
    pub quasi_null_coeff: f64,
    /// Required for `kind = "fr"`; must be positive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default = "one")]
    pub q: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::Wkg,
            c: 1.0,
            matter: false,
            null_coeff: 0.0,
            quasi_null_coeff: 0.0,
            kappa: None,
            q: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "zero_profile")]
    pub u0: Profile,
    #[serde(default = "zero_profile")]
    pub u1: Profile,
    #[serde(default = "zero_profile")]
    pub phi0: Profile,
    #[serde(default = "zero_profile")]
    pub phi1: Profile,
    #[serde(default)]
    pub rho: RhoData,
    #[serde(default = "one")]
    pub support_radius: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::from(InitialData::zero())
    }
}

impl From<InitialData> for DataConfig {
    fn from(d: InitialData) -> Self {
        DataConfig {
            epsilon: d.epsilon,
            u0: d.u0,
            u1: d.u1,
            phi0: d.phi0,
            phi1: d.phi1,
            rho: d.rho,
            support_radius: d.support_radius,
        }
    }
}

impl DataConfig {
    pub fn initial_data(&self) -> InitialData {
        InitialData {
            epsilon: self.epsilon,
            u0: self.u0,
            u1: self.u1,
            phi0: self.phi0,
            phi1: self.phi1,
            rho: self.rho,
            support_radius: self.support_radius,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dr: f64,
    pub r_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "cartesian")]
    pub mode: Mode,
    /// First slice (`t₀` or `s₀`).
    #[serde(default = "two")]
    pub start: f64,
    pub end: f64,
    #[serde(default = "half")]
    pub cadence: f64,
    /// Highest energy order recorded, at most 2.
    #[serde(default = "two_usize")]
    pub analysis_order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Write a checkpoint of the final slice.
    #[serde(default = "yes")]
    pub checkpoint: bool,
    /// Runs are seed-free; the flag is echoed so manifests say so.
    #[serde(default = "yes")]
    pub deterministic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub data: DataConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub run: RunSection,
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn two_usize() -> usize {
    2
}
fn yes() -> bool {
    true
}
fn cartesian() -> Mode {
    Mode::Cartesian
}
fn zero_profile() -> Profile {
    Profile::Zero
}

/// The key a validation message opens with, if it is one of `known`.
fn key_named<'a>(msg: &str, known: &[&'a str], fallback: &'a str) -> &'a str {
    let first = msg
        .rsplit(": ")
        .next()
        .and_then(|m| m.split_whitespace().next())
        .unwrap_or("");
    known.iter().copied().find(|k| *k == first).unwrap_or(fallback)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line holding `key` inside `[section]` (or a dotted/inline form of it).
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((k, _)) = line.split_once('=') else {
            continue;
        };
        let k = k.trim();
        let full = if current.is_empty() {
            k.to_string()
        } else {
            format!("{current}.{k}")
        };
        if full == format!("{section}.{key}") || (current == section && k == key) {
            return Some(i + 1);
        }
    }
    None
}

impl RunConfig {
    fn range(&self, text: &str, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Range {
            key: format!("{section}.{key}"),
            line: locate(text, section, key),
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.check("")
    }

    fn check(&self, text: &str) -> Result<(), ConfigError> {
        let m = &self.model;
        match (m.kind, m.kappa) {
            (ModelKind::Fr, None) => return Err(self.range(text, "model", "kappa", "required for kind = \"fr\"")),
            (_, Some(k)) if !(k.is_finite() && k > 0.0) => {
                return Err(self.range(text, "model", "kappa", format!("must be > 0, got {k}")))
            }
            _ => {}
        }
        if let Err(e) = self.model_system() {
            let msg = e.to_string();
            let key = key_named(&msg, &["c", "kappa", "q"], "null_coeff");
            return Err(self.range(text, "model", key, msg));
        }
        if let Err(e) = self.data.initial_data().validate() {
            let msg = e.to_string();
            let key = key_named(&msg, &["epsilon", "support"], "u0");
            let key = if key == "support" { "support_radius" } else { key };
            return Err(self.range(text, "data", key, msg));
        }
        let g = &self.grid;
        if !(g.dr.is_finite() && g.dr > 0.0) {
            return Err(self.range(text, "grid", "dr", format!("must be > 0, got {}", g.dr)));
        }
        if !(g.r_max.is_finite() && g.r_max >= 5.0 * g.dr) {
            return Err(self.range(text, "grid", "r_max", "must hold at least six nodes"));
        }
        if let Err(e) = self.scheme.validate() {
            let msg = e.to_string();
            let key = key_named(&msg, &["cfl", "dt", "dissipation"], "sponge_width");
            return Err(self.range(text, "scheme", key, msg));
        }
        let r = &self.run;
        if !(r.start.is_finite() && r.start > 0.0) {
            return Err(self.range(text, "run", "start", format!("must be > 0, got {}", r.start)));
        }
        if !(r.end.is_finite() && r.end >= r.start) {
            return Err(self.range(text, "run", "end", format!("must be ≥ start, got {}", r.end)));
        }
        if !(r.cadence.is_finite() && r.cadence > 0.0) {
            return Err(self.range(text, "run", "cadence", format!("must be > 0, got {}", r.cadence)));
        }
        if r.analysis_order > crate::analysis::MAX_ORDER {
            return Err(self.range(
                text,
                "run",
                "analysis_order",
                format!("at most {}, got {}", crate::analysis::MAX_ORDER, r.analysis_order),
            ));
        }
        Ok(())
    }

    pub fn wkg_model(&self) -> Result<WkgModel, ModelError> {
        let m = &self.model;
        WkgModel::new(m.c, m.matter, m.null_coeff, m.quasi_null_coeff)
    }

    pub fn model_system(&self) -> Result<ModelSystem, ModelError> {
        let wkg = self.wkg_model()?;
        Ok(match (self.model.kind, self.model.kappa) {
            (ModelKind::Wkg, _) => ModelSystem::Wkg(wkg),
            (ModelKind::Fr, Some(k)) => ModelSystem::Fr(FrModel::new(wkg, k, self.model.q)?),
            (ModelKind::Fr, None) => return Err(ModelError::Invalid("kappa is required".into())),
        })
    }

    /// A κ sweep sharing this run's data, grid, scheme and interval.
    pub fn sweep_config(&self, kappas: Vec<f64>) -> Result<SweepConfig, ModelError> {
        Ok(SweepConfig {
            kappas,
            data: self.data.initial_data(),
            model: self.wkg_model()?,
            q: self.model.q,
            dr: self.grid.dr,
            r_max: self.grid.r_max,
            scheme: self.scheme,
            start: self.run.start,
            end: self.run.end,
            cadence: self.run.cadence,
        })
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.span().map(|s| line_of_offset(text, s.start)).unwrap_or(1),
        message: e.message().to_string(),
    })?;
    cfg.check(text)?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
