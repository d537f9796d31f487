//! Model systems: the scalar wave–Klein-Gordon surrogate of the Einstein
//! system and the f(R)-type triplet `(u, φ, ρ)`.
//!
//! Sign conventions: with `□ = −∂_t² + Δ`, each unknown obeys
//!
//! ```text
//! □u        = S_u
//! □φ − c²φ  = S_φ
//! 3κ□ρ − ρ  = S_ρ
//! ```
//!
//! so that `∂_t²w = Δw + forcing(w)` with `forcing = −S_u`, `−c²φ − S_φ`
//! and `−(ρ + S_ρ)/(3κ)` respectively.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{EvolutionState, Field};
use crate::foliation::{
    apply_frame, d_r4, d_rr4, laplacian4, FoliationError, FrameField, Parity, SliceChart,
    SliceKind,
};

pub const EIGHT_PI: f64 = 8.0 * PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid model parameter: {0}")]
    Invalid(String),
    #[error("non-finite {field} at node {node}")]
    NonFinite { field: &'static str, node: usize },
    #[error("state lacks the {0} channel required by the model")]
    MissingChannel(&'static str),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
}

/// Einstein-type scalar model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WkgModel {
    /// Klein-Gordon mass.
    pub c: f64,
    /// Couples the matter terms into the wave equation.
    pub matter: bool,
    /// Coefficient of `Q0(u, u) = −u_t² + u_r²` in the wave source.
    pub null_coeff: f64,
    /// Coefficient of the quasi-null self-interaction `u_t²`.
    pub quasi_null_coeff: f64,
}

impl WkgModel {
    pub fn new(c: f64, matter: bool, null_coeff: f64, quasi_null_coeff: f64) -> Result<Self, ModelError> {
        let m = WkgModel {
            c,
            matter,
            null_coeff,
            quasi_null_coeff,
        };
        m.validate()?;
        Ok(m)
    }

    /// Linear wave + Klein-Gordon pair (no coupling, no self-interaction).
    pub fn linear(c: f64) -> Result<Self, ModelError> {
        WkgModel::new(c, false, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(ModelError::Invalid(format!("c must be positive, got {}", self.c)));
        }
        if !self.null_coeff.is_finite() || !self.quasi_null_coeff.is_finite() {
            return Err(ModelError::Invalid("nonlinearity coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn sources(&self, p: &PointValues) -> Sources {
        fr_sources(self, 0.0, 0.0, p)
    }
}

/// f(R)-type model with relaxation parameter `κ` and remainder `κ·q·ρ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrModel {
    pub wkg: WkgModel,
    pub kappa: f64,
    pub q: f64,
}

impl FrModel {
    pub fn new(wkg: WkgModel, kappa: f64, q: f64) -> Result<Self, ModelError> {
        let m = FrModel { wkg, kappa, q };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.wkg.validate()?;
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(ModelError::Invalid(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !self.q.is_finite() {
            return Err(ModelError::Invalid("q must be finite".into()));
        }
        Ok(())
    }

    pub fn sources(&self, p: &PointValues) -> Sources {
        fr_sources(&self.wkg, self.kappa, self.q, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSystem {
    Wkg(WkgModel),
    Fr(FrModel),
}

impl ModelSystem {
    pub fn wkg(&self) -> &WkgModel {
        match self {
            ModelSystem::Wkg(m) => m,
            ModelSystem::Fr(m) => &m.wkg,
        }
    }

    pub fn c(&self) -> f64 {
        self.wkg().c
    }

    pub fn has_rho(&self) -> bool {
        matches!(self, ModelSystem::Fr(_))
    }

    pub fn kappa(&self) -> Option<f64> {
        match self {
            ModelSystem::Fr(m) => Some(m.kappa),
            ModelSystem::Wkg(_) => None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            ModelSystem::Wkg(m) => m.validate(),
            ModelSystem::Fr(m) => m.validate(),
        }
    }

    pub fn sources(&self, p: &PointValues) -> Sources {
        match self {
            ModelSystem::Wkg(m) => m.sources(p),
            ModelSystem::Fr(m) => m.sources(p),
        }
    }

    /// Non-derivative part of `∂_t²w − Δw` for each unknown. With
    /// `split_stiff` the relaxation term `−ρ/(3κ)` is left out.
    pub fn forcing(&self, p: &PointValues, split_stiff: bool) -> Sources {
        let s = self.sources(p);
        let c2 = self.c() * self.c();
        let rho = match self {
            ModelSystem::Wkg(_) => 0.0,
            ModelSystem::Fr(m) => {
                let relax = if split_stiff { 0.0 } else { p.rho };
                -(relax + s.rho) / (3.0 * m.kappa)
            }
        };
        Sources {
            u: -s.u,
            phi: -c2 * p.phi - s.phi,
            rho,
        }
    }

    /// `∂_t²w` given the Laplacians `[Δu, Δφ, Δρ]`.
    pub fn accelerations(&self, p: &PointValues, lap: [f64; 3]) -> Sources {
        let f = self.forcing(p, false);
        Sources {
            u: lap[0] + f.u,
            phi: lap[1] + f.phi,
            rho: lap[2] + f.rho,
        }
    }
}

/// Field values and first derivatives at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointValues {
    pub u: f64,
    pub u_t: f64,
    pub u_r: f64,
    pub phi: f64,
    pub phi_t: f64,
    pub phi_r: f64,
    pub rho: f64,
    pub rho_t: f64,
    pub rho_r: f64,
}

/// One value per unknown.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sources {
    pub u: f64,
    pub phi: f64,
    pub rho: f64,
}

/// Grid functions per unknown; `rho` is empty for the Einstein-type model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceGrid {
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    pub rho: Vec<f64>,
}

/// `Q0(a, b) = −a_t b_t + a_r b_r`.
pub fn q0(a_t: f64, a_r: f64, b_t: f64, b_r: f64) -> f64 {
    -a_t * b_t + a_r * b_r
}

/// Common evaluation of both models; `κ = 0` with `ρ = 0` reproduces the
/// Einstein-type sources exactly (every extra term vanishes identically).
fn fr_sources(m: &WkgModel, kappa: f64, q: f64, p: &PointValues) -> Sources {
    let c2 = m.c * m.c;
    let x = q0(p.phi_t, p.phi_r, p.phi_t, p.phi_r);
    let y = q0(p.rho_t, p.rho_r, p.rho_t, p.rho_r);
    let z = q0(p.phi_t, p.phi_r, p.rho_t, p.rho_r);
    let e1 = (-kappa * p.rho).exp();
    let e2 = (-2.0 * kappa * p.rho).exp();

    let self_interaction =
        m.null_coeff * q0(p.u_t, p.u_r, p.u_t, p.u_r) + m.quasi_null_coeff * (p.u_t * p.u_t);
    let matter = if m.matter {
        EIGHT_PI * (2.0 * e1 * x + c2 * p.phi * p.phi * e2 * p.u)
    } else {
        0.0
    };
    let u = self_interaction - matter - 3.0 * kappa * kappa * y + kappa * q * p.rho * p.rho * p.u;
    let phi = c2 * (e1 - 1.0) * p.phi + kappa * z;
    let rho = kappa * q * p.rho * p.rho - EIGHT_PI * (x + 0.5 * c2 * e1 * p.phi * p.phi);
    Sources { u, phi, rho }
}

/// `8π(−φ_t² + φ_r² + (c²/2)φ²)`.
pub fn algebraic_rho_at(p: &PointValues, c: f64) -> f64 {
    EIGHT_PI * (q0(p.phi_t, p.phi_r, p.phi_t, p.phi_r) + 0.5 * c * c * p.phi * p.phi)
}

/// Sources of the f(R)-type model at `κ = 0` with `ρ` replaced by its
/// algebraic limit; only `u` and `φ` of the point are read.
pub fn einstein_limit_sources(p: &PointValues, model: &WkgModel, q: f64) -> Sources {
    let limit = PointValues {
        rho: algebraic_rho_at(p, model.c),
        rho_t: 0.0,
        rho_r: 0.0,
        ..*p
    };
    fr_sources(model, 0.0, q, &limit)
}

/// Minkowski `∂_r w` at the nodes with fourth-order stencils. On a
/// hyperboloid this is `∂_x w − (x/t)∂_t w`.
pub fn radial_derivative(f: &Field, chart: &SliceChart) -> Result<Vec<f64>, ModelError> {
    let grid = chart.grid();
    if f.value.len() != grid.len() || f.dt.len() != grid.len() {
        return Err(FoliationError::LengthMismatch {
            got: f.value.len().min(f.dt.len()),
            expected: grid.len(),
        }
        .into());
    }
    let along = d_r4(&f.value, grid.dr(), Parity::Even);
    Ok(match chart.kind() {
        SliceKind::Flat { .. } => along,
        SliceKind::Hyperboloid { .. } => (0..grid.len())
            .map(|i| along[i] - grid.r(i) / chart.t_at(i) * f.dt[i])
            .collect(),
    })
}

/// Point values of a state on its chart, with Minkowski `∂_t` and `∂_r`.
pub fn point_values(state: &EvolutionState, chart: &SliceChart) -> Result<Vec<PointValues>, ModelError> {
    let radial = |f: &Field| radial_derivative(f, chart);
    let u_r = radial(&state.u)?;
    let phi_r = radial(&state.phi)?;
    let rho_r = match &state.rho {
        Some(f) => Some(radial(f)?),
        None => None,
    };
    let n = state.grid.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut p = PointValues {
            u: state.u.value[i],
            u_t: state.u.dt[i],
            u_r: u_r[i],
            phi: state.phi.value[i],
            phi_t: state.phi.dt[i],
            phi_r: phi_r[i],
            ..PointValues::default()
        };
        if let (Some(f), Some(r)) = (&state.rho, &rho_r) {
            p.rho = f.value[i];
            p.rho_t = f.dt[i];
            p.rho_r = r[i];
        }
        out.push(p);
    }
    Ok(out)
}

fn check_finite(points: &[PointValues]) -> Result<(), ModelError> {
    for (node, p) in points.iter().enumerate() {
        let fields = [
            ("u", p.u),
            ("u_t", p.u_t),
            ("phi", p.phi),
            ("phi_t", p.phi_t),
            ("rho", p.rho),
            ("rho_t", p.rho_t),
        ];
        if let Some((field, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ModelError::NonFinite { field, node });
        }
    }
    Ok(())
}

/// Source grid functions of the model on the state's slice.
pub fn source_terms(
    model: &ModelSystem,
    state: &EvolutionState,
    chart: &SliceChart,
) -> Result<SourceGrid, ModelError> {
    if model.has_rho() && state.rho.is_none() {
        return Err(ModelError::MissingChannel("rho"));
    }
    let points = point_values(state, chart)?;
    check_finite(&points)?;
    let mut out = SourceGrid::default();
    for p in &points {
        let s = model.sources(p);
        out.u.push(s.u);
        out.phi.push(s.phi);
        if model.has_rho() {
            out.rho.push(s.rho);
        }
    }
    Ok(out)
}

/// `Q0(u, v)` on the slice, from values and Minkowski time derivatives.
pub fn catalog_nullform(
    u: (&[f64], &[f64]),
    v: (&[f64], &[f64]),
    chart: &SliceChart,
) -> Result<Vec<f64>, ModelError> {
    let u_r = apply_frame(FrameField::RadialTranslation, u.0, Some(u.1), chart)?;
    let v_r = apply_frame(FrameField::RadialTranslation, v.0, Some(v.1), chart)?;
    Ok((0..u_r.len())
        .map(|i| q0(u.1[i], u_r[i], v.1[i], v_r[i]))
        .collect())
}

/// First and second Minkowski derivatives of one unknown on a slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelJet {
    pub value: Vec<f64>,
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub tt: Vec<f64>,
    pub tr: Vec<f64>,
    pub rr: Vec<f64>,
}

/// Jets of every unknown (`u`, `φ`, then `ρ` if present). Second time
/// derivatives come from the model equations. On a hyperboloid the slice
/// only carries `u` and `∂_t u`, so `∂_t²u`, `∂_t∂_r u` and `∂_r²u` are
/// recovered from the tangential derivatives together with the equation.
pub fn channel_jets(
    model: &ModelSystem,
    state: &EvolutionState,
    chart: &SliceChart,
) -> Result<Vec<ChannelJet>, ModelError> {
    if model.has_rho() && state.rho.is_none() {
        return Err(ModelError::MissingChannel("rho"));
    }
    let points = point_values(state, chart)?;
    check_finite(&points)?;
    let forcing: Vec<Sources> = points.iter().map(|p| model.forcing(p, false)).collect();
    let grid = chart.grid();
    let h = grid.dr();
    let n = grid.len();
    let mut fields = vec![(&state.u, 0usize), (&state.phi, 1)];
    if let (true, Some(rho)) = (model.has_rho(), &state.rho) {
        fields.push((rho, 2));
    }
    let pick = |s: &Sources, k: usize| match k {
        0 => s.u,
        1 => s.phi,
        _ => s.rho,
    };
    let mut out = Vec::new();
    for (f, k) in fields {
        let ur = radial_derivative(f, chart)?;
        let dxp = d_r4(&f.dt, h, Parity::Even);
        let jet = match chart.kind() {
            SliceKind::Flat { .. } => {
                let lap = laplacian4(&f.value, h);
                ChannelJet {
                    tt: (0..n).map(|i| lap[i] + pick(&forcing[i], k)).collect(),
                    tr: dxp,
                    rr: d_rr4(&f.value, h, Parity::Even),
                    value: f.value.clone(),
                    t: f.dt.clone(),
                    r: ur,
                }
            }
            SliceKind::Hyperboloid { s } => {
                let dxw = d_r4(&ur, h, Parity::Odd);
                let (mut tt, mut tr, mut rr) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
                for i in 0..n {
                    let x = grid.r(i);
                    let t = chart.t_at(i);
                    // 2u_r/r, by parity 2u_rr at the origin
                    let friction = if i == 0 { 2.0 * dxw[0] } else { 2.0 * ur[i] / x };
                    let fk = pick(&forcing[i], k);
                    tt[i] = t * t / (s * s) * (dxw[i] + friction + fk - x / t * dxp[i]);
                    tr[i] = dxp[i] - x / t * tt[i];
                    rr[i] = tt[i] - friction - fk;
                }
                ChannelJet {
                    value: f.value.clone(),
                    t: f.dt.clone(),
                    r: ur,
                    tt,
                    tr,
                    rr,
                }
            }
        };
        out.push(jet);
    }
    Ok(out)
}

/// Closed-form radial profile for initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Zero,
    /// `A (1 − (r/R)²)⁴` for `r < R`.
    Bump { amplitude: f64, radius: f64 },
    /// `A (1 − ((r − r₀)/w)²)⁴` for `|r − r₀| < w`.
    Shell { amplitude: f64, center: f64, width: f64 },
    /// Rate slot only: `−r⁻¹∂_r(r w₀)`, the time derivative of the purely
    /// outgoing solution with value profile `w₀` (which must be a shell).
    Outgoing,
}

impl Profile {
    pub fn support(&self) -> f64 {
        match *self {
            Profile::Zero | Profile::Outgoing => 0.0,
            Profile::Bump { radius, .. } => radius,
            Profile::Shell { center, width, .. } => center + width,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = match *self {
            Profile::Zero | Profile::Outgoing => true,
            Profile::Bump { amplitude, radius } => amplitude.is_finite() && radius > 0.0,
            Profile::Shell {
                amplitude,
                center,
                width,
            } => amplitude.is_finite() && width > 0.0 && center >= width,
        };
        if !ok {
            return Err(ModelError::Invalid(format!("malformed profile {self:?}")));
        }
        Ok(())
    }

    /// Value and first two radial derivatives at `r`.
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let (a, x, w) = match *self {
            Profile::Zero | Profile::Outgoing => return [0.0; 3],
            Profile::Bump { amplitude, radius } => (amplitude, r, radius),
            Profile::Shell {
                amplitude,
                center,
                width,
            } => (amplitude, r - center, width),
        };
        let y = x / w;
        if y.abs() >= 1.0 {
            return [0.0; 3];
        }
        let b = 1.0 - y * y;
        let v = a * b.powi(4);
        let d1 = a * 4.0 * b.powi(3) * (-2.0 * y) / w;
        let d2 = a * (48.0 * b.powi(2) * y * y - 8.0 * b.powi(3)) / (w * w);
        [v, d1, d2]
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r)[0]
    }
}

/// How the `ρ` channel of an f(R)-type run is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RhoData {
    /// `ρ₀` and `ρ₁` taken from the algebraic limit of the initial state.
    #[default]
    WellPrepared,
    /// `ρ₀ = ρ₁ = 0`.
    IllPrepared,
}

/// Initial data on the first slice: `w = ε·w₀(r)`, `∂_t w = ε·w₁(r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub epsilon: f64,
    pub u0: Profile,
    pub u1: Profile,
    pub phi0: Profile,
    pub phi1: Profile,
    #[serde(default)]
    pub rho: RhoData,
    /// Profiles must vanish outside this radius.
    #[serde(default = "unit_support")]
    pub support_radius: f64,
}

fn unit_support() -> f64 {
    1.0
}

impl InitialData {
    pub fn zero() -> Self {
        InitialData {
            epsilon: 0.0,
            u0: Profile::Zero,
            u1: Profile::Zero,
            phi0: Profile::Zero,
            phi1: Profile::Zero,
            rho: RhoData::WellPrepared,
            support_radius: 1.0,
        }
    }

    /// Data supported in `{r < support_radius}`.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.epsilon.is_finite() {
            return Err(ModelError::Invalid("epsilon must be finite".into()));
        }
        if !(self.support_radius.is_finite() && self.support_radius > 0.0) {
            return Err(ModelError::Invalid("support radius must be positive".into()));
        }
        for (value, rate) in [(self.u0, self.u1), (self.phi0, self.phi1)] {
            if value == Profile::Outgoing {
                return Err(ModelError::Invalid("outgoing is only allowed as a rate profile".into()));
            }
            if rate == Profile::Outgoing && !matches!(value, Profile::Shell { .. } | Profile::Zero) {
                return Err(ModelError::Invalid("outgoing rate needs a shell value profile".into()));
            }
        }
        for p in [self.u0, self.u1, self.phi0, self.phi1] {
            p.validate()?;
            if p.support() > self.support_radius {
                return Err(ModelError::Invalid(format!(
                    "profile support {} exceeds {}",
                    p.support(),
                    self.support_radius
                )));
            }
        }
        Ok(())
    }
}

/// Rate profile at `r`, resolving [`Profile::Outgoing`] against `value`.
pub fn rate_at(value: &Profile, rate: &Profile, r: f64) -> f64 {
    match rate {
        Profile::Outgoing => {
            let [v, d1, _] = value.eval(r);
            if r == 0.0 {
                -2.0 * d1
            } else {
                -(d1 + v / r)
            }
        }
        other => other.value(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PointValues {
        PointValues {
            u: 0.3,
            u_t: -0.2,
            u_r: 0.7,
            phi: 0.4,
            phi_t: 0.1,
            phi_r: -0.25,
            rho: 0.0,
            rho_t: 0.0,
            rho_r: 0.0,
        }
    }

    #[test]
    fn zero_fields_give_zero_sources() {
        let wkg = WkgModel::new(1.0, true, 1.0, 0.5).unwrap();
        let fr = FrModel::new(wkg, 0.3, 1.0).unwrap();
        let z = PointValues::default();
        assert_eq!(wkg.sources(&z), Sources::default());
        let s = fr.sources(&z);
        assert_eq!((s.u, s.phi, s.rho), (0.0, 0.0, 0.0));
    }

    #[test]
    fn fr_sources_reduce_at_vanishing_rho() {
        let wkg = WkgModel::new(1.3, true, 0.7, 0.2).unwrap();
        for kappa in [1e-3, 0.1, 2.0] {
            let fr = FrModel::new(wkg, kappa, 1.0).unwrap();
            let (a, b) = (fr.sources(&sample()), wkg.sources(&sample()));
            assert_eq!(a.u.to_bits(), b.u.to_bits());
            assert_eq!(a.phi, 0.0);
        }
    }

    #[test]
    fn limit_sources_match_einstein_model() {
        let wkg = WkgModel::new(0.8, true, 1.0, 0.1).unwrap();
        let a = einstein_limit_sources(&sample(), &wkg, 1.0);
        let b = wkg.sources(&sample());
        assert_eq!(a.u, b.u);
        assert_eq!(a.phi, b.phi);
        assert_eq!(a.rho, -algebraic_rho_at(&sample(), 0.8));
    }

    #[test]
    fn constant_field_limit_is_four_pi() {
        let p = PointValues {
            phi: 1.0,
            ..PointValues::default()
        };
        assert!((algebraic_rho_at(&p, 1.0) - 4.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(WkgModel::new(0.0, true, 0.0, 0.0).is_err());
        let wkg = WkgModel::linear(1.0).unwrap();
        assert!(FrModel::new(wkg, -0.1, 1.0).is_err());
    }

    #[test]
    fn profile_derivatives_match_differences() {
        let p = Profile::Shell {
            amplitude: 2.0,
            center: 0.6,
            width: 0.35,
        };
        let h = 1e-5;
        for r in [0.3, 0.5, 0.62, 0.8] {
            let [_, d1, d2] = p.eval(r);
            let fd1 = (p.value(r + h) - p.value(r - h)) / (2.0 * h);
            let fd2 = (p.value(r + h) - 2.0 * p.value(r) + p.value(r - h)) / (h * h);
            assert!((d1 - fd1).abs() < 1e-6, "{r}");
            assert!((d2 - fd2).abs() < 1e-3, "{r}");
        }
    }
}
