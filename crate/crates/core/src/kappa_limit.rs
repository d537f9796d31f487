//! The relaxation limit `κ → 0`: the algebraic limit of `ρ` and sweeps
//! comparing f(R)-type runs against the Einstein-type reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::integrate_squared;
use crate::evolution::{run, EvolutionError, EvolutionState, RunSpec, SchemeConfig};
use crate::foliation::{RadialGrid, SliceChart};
use crate::models::{
    algebraic_rho_at, point_values, FrModel, InitialData, ModelError, ModelSystem, WkgModel,
};

#[derive(Debug, Error)]
pub enum KappaError {
    #[error("invalid sweep: {0}")]
    Config(String),
    #[error("reference run failed: {0}")]
    Reference(EvolutionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

/// `8π(−φ_t² + φ_r² + (c²/2)φ²)` on the state's slice.
pub fn algebraic_rho(state: &EvolutionState, c: f64) -> Result<Vec<f64>, ModelError> {
    let chart = state.chart()?;
    Ok(point_values(state, &chart)?
        .iter()
        .map(|p| algebraic_rho_at(p, c))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Strictly decreasing, positive.
    pub kappas: Vec<f64>,
    pub data: InitialData,
    pub model: WkgModel,
    pub q: f64,
    pub dr: f64,
    pub r_max: f64,
    pub scheme: SchemeConfig,
    pub start: f64,
    pub end: f64,
    pub cadence: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), KappaError> {
        if self.kappas.is_empty() {
            return Err(KappaError::Config("empty kappa list".into()));
        }
        if self.kappas.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(KappaError::Config("kappa values must be positive".into()));
        }
        if self.kappas.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(KappaError::Config("kappa values must be strictly decreasing".into()));
        }
        if !(self.start.is_finite() && self.end.is_finite() && self.end > self.start) {
            return Err(KappaError::Config("interval must be bounded and nonempty".into()));
        }
        self.model.validate()?;
        self.data.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaErrors {
    pub kappa: f64,
    /// `sup_t ‖ρ_κ − ρ_alg(φ_κ)‖_{L²}`.
    pub err_rho: f64,
    /// `sup_t ‖u_κ − u_ref‖_{L²}`.
    pub err_u: f64,
    pub err_phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub q: f64,
    pub rows: Vec<KappaErrors>,
    /// κ values whose run aborted, with the reason.
    pub failed: Vec<(f64, String)>,
    /// Slopes of `log e` against `log κ`; present with at least three rows.
    pub slope_rho: Option<f64>,
    pub slope_u: Option<f64>,
    pub slope_phi: Option<f64>,
}

impl ConvergenceReport {
    pub fn rho_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].err_rho < w[0].err_rho)
    }

    pub fn phi_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].err_phi < w[0].err_phi)
    }
}

/// Least-squares slope of `log y` against `log x`; `None` with fewer than
/// three points or any nonpositive value.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let m = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn trajectory(model: &ModelSystem, cfg: &SweepConfig) -> Result<Vec<EvolutionState>, EvolutionError> {
    let grid = RadialGrid::covering(cfg.dr, cfg.r_max)?;
    let chart = SliceChart::flat(cfg.start, grid)?;
    let initial = EvolutionState::from_data(&cfg.data, model, &chart)?;
    let spec = RunSpec {
        end: cfg.end,
        cadence: cfg.cadence,
        keep_history: false,
        keep_snapshots: true,
    };
    Ok(run(initial, model, &cfg.scheme, &spec, |_| Ok(()))?.snapshots)
}

fn l2_difference(a: &[f64], b: &[f64], chart: &SliceChart) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    integrate_squared(&d, chart).sqrt()
}

fn measure(kappa: f64, cfg: &SweepConfig, reference: &[EvolutionState]) -> Result<KappaErrors, KappaError> {
    let model = ModelSystem::Fr(FrModel::new(cfg.model, kappa, cfg.q)?);
    let slices = trajectory(&model, cfg)?;
    let mut e = KappaErrors {
        kappa,
        err_rho: 0.0,
        err_u: 0.0,
        err_phi: 0.0,
    };
    for (st, re) in slices.iter().zip(reference) {
        let chart = st.chart().map_err(EvolutionError::from)?;
        let rho = st.rho.as_ref().expect("f(R) state carries rho");
        let limit = algebraic_rho(st, cfg.model.c)?;
        e.err_rho = e.err_rho.max(l2_difference(&rho.value, &limit, &chart));
        e.err_u = e.err_u.max(l2_difference(&st.u.value, &re.u.value, &chart));
        e.err_phi = e.err_phi.max(l2_difference(&st.phi.value, &re.phi.value, &chart));
    }
    Ok(e)
}

/// Runs the Einstein-type reference and every κ member (in parallel) and
/// collects the error table. Aborted members are reported in `failed`.
pub fn sweep(cfg: &SweepConfig) -> Result<ConvergenceReport, KappaError> {
    cfg.validate()?;
    let reference = trajectory(&ModelSystem::Wkg(cfg.model), cfg).map_err(KappaError::Reference)?;
    let results: Vec<(f64, Result<KappaErrors, KappaError>)> = cfg
        .kappas
        .par_iter()
        .map(|&k| (k, measure(k, cfg, &reference)))
        .collect();
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (k, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => failed.push((k, e.to_string())),
        }
    }
    let slope = |f: fn(&KappaErrors) -> f64| loglog_slope(&rows.iter().map(|r| (r.kappa, f(r))).collect::<Vec<_>>());
    Ok(ConvergenceReport {
        q: cfg.q,
        slope_rho: slope(|r| r.err_rho),
        slope_u: slope(|r| r.err_u),
        slope_phi: slope(|r| r.err_phi),
        rows,
        failed,
    })
}
