use crate::foliation::{d_r, laplacian, RadialGrid};
use crate::models::{ModelSystem, PointValues};

use super::{add_dissipation, oscillator_cn, rk4, EvolutionError, EvolutionState, SchemeConfig};

fn pack(state: &EvolutionState) -> Vec<Vec<f64>> {
    state
        .fields()
        .iter()
        .flat_map(|f| [f.value.clone(), f.dt.clone()])
        .collect()
}

fn unpack(state: &EvolutionState, y: Vec<Vec<f64>>, time: f64) -> EvolutionState {
    let mut next = state.clone();
    next.time = time;
    let mut it = y.into_iter();
    for f in next.fields_mut() {
        f.value = it.next().expect("value channel");
        f.dt = it.next().expect("rate channel");
    }
    next
}

fn rhs(
    y: &[Vec<f64>],
    grid: &RadialGrid,
    model: &ModelSystem,
    scheme: &SchemeConfig,
) -> Vec<Vec<f64>> {
    let n = grid.len();
    let h = grid.dr();
    let unknowns = y.len() / 2;
    let radial: Vec<Vec<f64>> = (0..unknowns).map(|k| d_r(&y[2 * k], h)).collect();
    let mut out = vec![vec![0.0; n]; y.len()];
    let mut lap = vec![0.0; n];
    let mut forcing = Vec::with_capacity(n);
    for i in 0..n {
        let mut p = PointValues {
            u: y[0][i],
            u_t: y[1][i],
            u_r: radial[0][i],
            phi: y[2][i],
            phi_t: y[3][i],
            phi_r: radial[1][i],
            ..PointValues::default()
        };
        if unknowns == 3 {
            p.rho = y[4][i];
            p.rho_t = y[5][i];
            p.rho_r = radial[2][i];
        }
        forcing.push(model.forcing(&p, scheme.stiff));
    }
    let r_max = grid.r_max();
    for k in 0..unknowns {
        let (w, p) = (&y[2 * k], &y[2 * k + 1]);
        laplacian(w, grid, &mut lap);
        let damped = k > 0;
        let (head, tail) = out.split_at_mut(2 * k + 1);
        let dw = &mut head[2 * k];
        let dp = &mut tail[0];
        for i in 0..n - 1 {
            let f = match k {
                0 => forcing[i].u,
                1 => forcing[i].phi,
                _ => forcing[i].rho,
            };
            let sponge = if damped { scheme.sponge(grid.r(i), r_max) } else { 0.0 };
            dw[i] = p[i];
            dp[i] = lap[i] + f - sponge * p[i];
        }
        // outgoing radiation condition (∂_t + ∂_r + 1/r) = 0
        let last = n - 1;
        let r = grid.r(last);
        let dp_r = (3.0 * p[last] - 4.0 * p[last - 1] + p[last - 2]) / (2.0 * h);
        dw[last] = -radial[k][last] - w[last] / r;
        dp[last] = -dp_r - p[last] / r;
        add_dissipation(w, dw, scheme.dissipation, h);
        add_dissipation(p, dp, scheme.dissipation, h);
    }
    out
}

pub(super) fn step(
    state: &EvolutionState,
    model: &ModelSystem,
    scheme: &SchemeConfig,
    dt: f64,
) -> Result<EvolutionState, EvolutionError> {
    let grid = state.grid;
    let mut y = pack(state);
    let split = scheme.stiff && y.len() == 6;
    let omega2 = model.kappa().map(|k| 1.0 / (3.0 * k)).unwrap_or(0.0);
    let interior = grid.len() - 1;
    if split {
        let (w, v) = y.split_at_mut(5);
        oscillator_cn(&mut w[4], &mut v[0], omega2, 0.5 * dt, interior);
    }
    let mut y = rk4(&y, state.time, dt, |_, y| Ok(rhs(y, &grid, model, scheme)))?;
    if split {
        let (w, v) = y.split_at_mut(5);
        oscillator_cn(&mut w[4], &mut v[0], omega2, 0.5 * dt, interior);
    }
    Ok(unpack(state, y, state.time + dt))
}

/// Discrete energy `4π[Σ V_i (p² + m²w²) + Σ A_{i+½}(w_{i+1} − w_i)²/h]`
/// that the flux-form Laplacian conserves exactly in the semi-discrete
/// interior scheme. The outer node is excluded.
pub fn discrete_energy(value: &[f64], dt: &[f64], mass: f64, grid: &RadialGrid) -> f64 {
    let n = grid.len();
    let h = grid.dr();
    let mut kinetic = 0.0;
    for i in 0..n - 1 {
        kinetic += grid.cell_volume_interior(i) * (dt[i] * dt[i] + mass * mass * value[i] * value[i]);
    }
    let mut gradient = 0.0;
    for i in 0..n - 2 {
        let d = value[i + 1] - value[i];
        gradient += grid.face_area(i) * d * d / h;
    }
    4.0 * std::f64::consts::PI * (kinetic + gradient)
}

/// Sum of the discrete energies of the linear wave and Klein-Gordon parts.
pub fn linear_energy(state: &EvolutionState, model: &ModelSystem) -> f64 {
    discrete_energy(&state.u.value, &state.u.dt, 0.0, &state.grid)
        + discrete_energy(&state.phi.value, &state.phi.dt, model.c(), &state.grid)
}
