//! Time integration in two modes: Cartesian time `t` on a fixed radial
//! grid, and native hyperboloidal time `s` on the slices `t² − r² = s²`.
//! Both use the method of lines with classical RK4.

mod cartesian;
pub mod checkpoint;
mod history;
mod hyperboloidal;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::foliation::{FoliationError, RadialGrid, SliceChart};
use crate::models::{
    algebraic_rho_at, channel_jets, rate_at, InitialData, ModelError, ModelSystem, PointValues,
    RhoData,
};

pub use cartesian::{discrete_energy, linear_energy};
pub use history::{interpolate_to_slice, CartesianHistory};

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("step {dt} exceeds the CFL limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("relaxation frequency times step is {0:.3}; enable the stiff scheme")]
    Stiff(f64),
    #[error("non-finite value in {field} after step {step} (time {time})")]
    NonFinite {
        field: &'static str,
        step: usize,
        time: f64,
    },
    #[error("invalid scheme: {0}")]
    Scheme(String),
    #[error("state does not match the model: {0}")]
    Incompatible(String),
    #[error("slice at t = {t} is not bracketed by stored levels [{lo}, {hi}]")]
    NotBracketed { t: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error("observer aborted the run: {0}")]
    Observer(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Slices of constant `t`.
    Cartesian,
    /// Hyperboloids of constant `s`.
    Hyperboloidal,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Cartesian => "cartesian",
            Mode::Hyperboloidal => "hyperboloidal",
        }
    }
}

/// Values of one unknown and its Minkowski time derivative at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub value: Vec<f64>,
    pub dt: Vec<f64>,
}

impl Field {
    pub fn zeros(n: usize) -> Self {
        Field {
            value: vec![0.0; n],
            dt: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub mode: Mode,
    /// `t` in Cartesian mode, `s` in hyperboloidal mode.
    pub time: f64,
    pub grid: RadialGrid,
    pub u: Field,
    pub phi: Field,
    pub rho: Option<Field>,
}

impl EvolutionState {
    pub fn zeros(mode: Mode, time: f64, grid: RadialGrid, with_rho: bool) -> Self {
        let n = grid.len();
        EvolutionState {
            mode,
            time,
            grid,
            u: Field::zeros(n),
            phi: Field::zeros(n),
            rho: with_rho.then(|| Field::zeros(n)),
        }
    }

    pub fn chart(&self) -> Result<SliceChart, FoliationError> {
        match self.mode {
            Mode::Cartesian => SliceChart::flat(self.time, self.grid),
            Mode::Hyperboloidal => SliceChart::hyperboloidal(self.time, self.grid, false),
        }
    }

    pub fn fields(&self) -> Vec<&Field> {
        let mut out = vec![&self.u, &self.phi];
        if let Some(r) = &self.rho {
            out.push(r);
        }
        out
    }

    pub fn fields_mut(&mut self) -> Vec<&mut Field> {
        let mut out = vec![&mut self.u, &mut self.phi];
        if let Some(r) = &mut self.rho {
            out.push(r);
        }
        out
    }

    /// Name of the first non-finite channel, if any.
    pub fn non_finite(&self) -> Option<&'static str> {
        const NAMES: [&str; 3] = ["u", "phi", "rho"];
        self.fields()
            .iter()
            .zip(NAMES)
            .find(|(f, _)| f.value.iter().chain(&f.dt).any(|v| !v.is_finite()))
            .map(|(_, name)| name)
    }

    /// Initial data on the slice of `chart`. On a flat slice the profiles
    /// give `w` and `∂_t w` directly; on a hyperboloid they give the same
    /// quantities at the nodes of `H_s`.
    pub fn from_data(
        data: &InitialData,
        model: &ModelSystem,
        chart: &SliceChart,
    ) -> Result<Self, EvolutionError> {
        data.validate()?;
        let mode = match chart.kind() {
            crate::foliation::SliceKind::Flat { .. } => Mode::Cartesian,
            crate::foliation::SliceKind::Hyperboloid { .. } => Mode::Hyperboloidal,
        };
        let grid = *chart.grid();
        let mut state = EvolutionState::zeros(mode, chart.time(), grid, model.has_rho());
        let eps = data.epsilon;
        for i in 0..grid.len() {
            let r = grid.r(i);
            state.u.value[i] = eps * data.u0.value(r);
            state.u.dt[i] = eps * rate_at(&data.u0, &data.u1, r);
            state.phi.value[i] = eps * data.phi0.value(r);
            state.phi.dt[i] = eps * rate_at(&data.phi0, &data.phi1, r);
        }
        if model.has_rho() && data.rho == RhoData::WellPrepared {
            let rho = prepared_rho(&state, model, chart)?;
            state.rho = Some(rho);
        }
        Ok(state)
    }
}

/// `ρ₀ = ρ_alg` and `ρ₁ = ∂_t ρ_alg`, evaluated with `ρ = 0` so that the
/// Klein-Gordon acceleration is the Einstein-type one.
fn prepared_rho(
    state: &EvolutionState,
    model: &ModelSystem,
    chart: &SliceChart,
) -> Result<Field, EvolutionError> {
    let c = model.c();
    let jets = channel_jets(model, state, chart)?;
    let phi = &jets[1];
    let n = state.grid.len();
    let mut out = Field::zeros(n);
    for i in 0..n {
        let p = PointValues {
            phi: phi.value[i],
            phi_t: phi.t[i],
            phi_r: phi.r[i],
            ..PointValues::default()
        };
        out.value[i] = algebraic_rho_at(&p, c);
        out.dt[i] = crate::models::EIGHT_PI
            * (2.0 * (-phi.t[i] * phi.tt[i] + phi.r[i] * phi.tr[i]) + c * c * phi.value[i] * phi.t[i]);
    }
    Ok(out)
}

fn default_cfl() -> f64 {
    0.5
}

fn default_sponge_width() -> f64 {
    0.1
}

fn default_sponge_strength() -> f64 {
    2.0
}

/// Discretization settings shared by both modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Fixed step; defaults to `cfl · dr` in Cartesian mode.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Kreiss–Oliger coefficient.
    #[serde(default)]
    pub dissipation: f64,
    /// Treat the `ρ` relaxation term implicitly.
    #[serde(default)]
    pub stiff: bool,
    /// Sponge layer width as a fraction of `r_max` (Klein-Gordon unknowns).
    #[serde(default = "default_sponge_width")]
    pub sponge_width: f64,
    #[serde(default = "default_sponge_strength")]
    pub sponge_strength: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            cfl: default_cfl(),
            dt: None,
            dissipation: 0.0,
            stiff: false,
            sponge_width: default_sponge_width(),
            sponge_strength: default_sponge_strength(),
        }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(EvolutionError::Scheme(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(EvolutionError::Scheme(format!("dt must be positive, got {dt}")));
            }
        }
        if !(0.0..1.0).contains(&self.dissipation) {
            return Err(EvolutionError::Scheme(format!(
                "dissipation must lie in [0, 1), got {}",
                self.dissipation
            )));
        }
        if !(0.0..=1.0).contains(&self.sponge_width) || !(self.sponge_strength >= 0.0) {
            return Err(EvolutionError::Scheme("sponge width must lie in [0, 1] and strength be nonnegative".into()));
        }
        Ok(())
    }

    /// Damping rate at radius `r` for the massive unknowns.
    pub(crate) fn sponge(&self, r: f64, r_max: f64) -> f64 {
        let width = self.sponge_width * r_max;
        let start = r_max - width;
        if width <= 0.0 || r <= start {
            return 0.0;
        }
        let x = (r - start) / width;
        self.sponge_strength * x * x
    }

    /// Largest admissible step at slice time `time`.
    pub fn max_step(&self, mode: Mode, time: f64, grid: &RadialGrid) -> f64 {
        let limit = self.cfl * grid.dr();
        match mode {
            Mode::Cartesian => limit,
            // the outgoing characteristic speed in s is (t + r)/s at the edge
            Mode::Hyperboloidal => {
                let r = grid.r_max();
                limit * time / (time.hypot(r) + r)
            }
        }
    }
}

fn check_compatible(state: &EvolutionState, model: &ModelSystem) -> Result<(), EvolutionError> {
    if model.has_rho() != state.rho.is_some() {
        return Err(EvolutionError::Incompatible(format!(
            "model {} a rho channel",
            if model.has_rho() { "requires" } else { "forbids" }
        )));
    }
    let n = state.grid.len();
    if state.fields().iter().any(|f| f.value.len() != n || f.dt.len() != n) {
        return Err(EvolutionError::Incompatible("channel length differs from grid".into()));
    }
    Ok(())
}

/// Advances the state by one step of size `dt` (in `t` or `s`).
pub fn step(
    state: &EvolutionState,
    model: &ModelSystem,
    scheme: &SchemeConfig,
    dt: f64,
) -> Result<EvolutionState, EvolutionError> {
    check_compatible(state, model)?;
    let limit = scheme.max_step(state.mode, state.time, &state.grid);
    if dt > limit * (1.0 + 1e-12) {
        return Err(EvolutionError::Cfl { dt, limit });
    }
    if let (Some(kappa), false) = (model.kappa(), scheme.stiff) {
        // RK4 is stable on the imaginary axis up to 2√2
        let omega = (3.0 * kappa).sqrt().recip();
        if omega * dt > 2.5 {
            return Err(EvolutionError::Stiff(omega * dt));
        }
    }
    match state.mode {
        Mode::Cartesian => cartesian::step(state, model, scheme, dt),
        Mode::Hyperboloidal => hyperboloidal::step(state, model, scheme, dt),
    }
}

/// Settings of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub end: f64,
    /// Spacing of the observed slices.
    pub cadence: f64,
    /// Keep every Cartesian step for later slice interpolation.
    pub keep_history: bool,
    /// Keep a copy of every observed slice.
    pub keep_snapshots: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<EvolutionState>,
    pub history: Option<CartesianHistory>,
    pub final_state: EvolutionState,
    pub steps: usize,
}

/// Integrates from `initial` to `spec.end`, calling `observer` on the
/// initial slice and on every slice at the cadence.
pub fn run<F>(
    initial: EvolutionState,
    model: &ModelSystem,
    scheme: &SchemeConfig,
    spec: &RunSpec,
    mut observer: F,
) -> Result<Trajectory, EvolutionError>
where
    F: FnMut(&EvolutionState) -> Result<(), EvolutionError>,
{
    model.validate()?;
    scheme.validate()?;
    check_compatible(&initial, model)?;
    if !(spec.cadence > 0.0) || !(spec.end >= initial.time) {
        return Err(EvolutionError::Scheme(format!(
            "need cadence > 0 and end ≥ start, got cadence {} and range [{}, {}]",
            spec.cadence, initial.time, spec.end
        )));
    }
    if spec.keep_history && initial.mode != Mode::Cartesian {
        return Err(EvolutionError::Scheme("history is only kept in Cartesian mode".into()));
    }
    if let Some(field) = initial.non_finite() {
        return Err(EvolutionError::NonFinite {
            field,
            step: 0,
            time: initial.time,
        });
    }
    let start = initial.time;
    let mut history = spec.keep_history.then(|| CartesianHistory::new(initial.grid));
    let mut snapshots = Vec::new();
    let mut state = initial;
    observer(&state)?;
    if spec.keep_snapshots {
        snapshots.push(state.clone());
    }
    if let Some(h) = &mut history {
        h.push(&state)?;
    }
    let intervals = ((spec.end - start) / spec.cadence - 1e-9).ceil().max(0.0) as usize;
    let mut steps = 0;
    for k in 1..=intervals {
        let target = (start + k as f64 * spec.cadence).min(spec.end);
        let span = target - state.time;
        let max = match scheme.dt {
            Some(dt) => dt,
            None => scheme.max_step(state.mode, state.time, &state.grid),
        };
        let m = (span / max - 1e-9).ceil().max(1.0) as usize;
        let dt = span / m as f64;
        for j in 0..m {
            let mut next = step(&state, model, scheme, dt)?;
            steps += 1;
            if j + 1 == m {
                next.time = target;
            }
            if let Some(field) = next.non_finite() {
                return Err(EvolutionError::NonFinite {
                    field,
                    step: steps,
                    time: next.time,
                });
            }
            state = next;
            if let Some(h) = &mut history {
                h.push(&state)?;
            }
        }
        observer(&state)?;
        if spec.keep_snapshots {
            snapshots.push(state.clone());
        }
    }
    Ok(Trajectory {
        snapshots,
        history,
        final_state: state,
        steps,
    })
}

/// Classical RK4 over a list of channels.
pub(crate) fn rk4<F>(y: &[Vec<f64>], time: f64, h: f64, mut rhs: F) -> Result<Vec<Vec<f64>>, EvolutionError>
where
    F: FnMut(f64, &[Vec<f64>]) -> Result<Vec<Vec<f64>>, EvolutionError>,
{
    let shift = |base: &[Vec<f64>], k: &[Vec<f64>], a: f64| -> Vec<Vec<f64>> {
        base.iter()
            .zip(k)
            .map(|(b, d)| b.iter().zip(d).map(|(x, dx)| x + a * dx).collect())
            .collect()
    };
    let k1 = rhs(time, y)?;
    let k2 = rhs(time + 0.5 * h, &shift(y, &k1, 0.5 * h))?;
    let k3 = rhs(time + 0.5 * h, &shift(y, &k2, 0.5 * h))?;
    let k4 = rhs(time + h, &shift(y, &k3, h))?;
    Ok(y.iter()
        .enumerate()
        .map(|(c, yc)| {
            (0..yc.len())
                .map(|i| yc[i] + h / 6.0 * (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]))
                .collect()
        })
        .collect())
}

/// Crank–Nicolson step of `w' = v, v' = −ω²w` over `tau`.
pub(crate) fn oscillator_cn(w: &mut [f64], v: &mut [f64], omega2: f64, tau: f64, nodes: usize) {
    let a = 0.5 * tau;
    let d = 1.0 + a * a * omega2;
    let m11 = (1.0 - a * a * omega2) / d;
    let m12 = 2.0 * a / d;
    let m21 = -2.0 * a * omega2 / d;
    for i in 0..nodes {
        let (x, y) = (w[i], v[i]);
        w[i] = m11 * x + m12 * y;
        v[i] = m21 * x + m11 * y;
    }
}

/// Kreiss–Oliger term `−σ/(16h) δ⁴w` with even reflection at the origin;
/// the last two nodes are left alone.
pub(crate) fn add_dissipation(w: &[f64], out: &mut [f64], sigma: f64, h: f64) {
    if sigma == 0.0 {
        return;
    }
    let n = w.len();
    let at = |i: isize| w[i.unsigned_abs()];
    let scale = sigma / (16.0 * h);
    for i in 0..n.saturating_sub(2) {
        let k = i as isize;
        let d4 = at(k - 2) - 4.0 * at(k - 1) + 6.0 * at(k) - 4.0 * at(k + 1) + at(k + 2);
        out[i] -= scale * d4;
    }
}
