//! Native evolution in `s` at fixed slice radius `x`. The evolved rate is
//! `V = ∂_s u|_x = (s/t)∂_t u`, and the wave operator becomes
//!
//! ```text
//! ∂_s V = Δ_x U − 2(x/s)∂_x V − (3/s)V + (∂_t²u − Δu)
//! ```
//!
//! with the flat radial Laplacian `Δ_x` along the slice. The forcing enters
//! unscaled, so the relaxation frequency of `ρ` is the same in `s` as in `t`.

use crate::foliation::{d_r, laplacian, RadialGrid};
use crate::models::{ModelSystem, PointValues};

use super::{add_dissipation, oscillator_cn, rk4, EvolutionError, EvolutionState, SchemeConfig};

fn t_of(s: f64, x: f64) -> f64 {
    s.hypot(x)
}

fn pack(state: &EvolutionState) -> Vec<Vec<f64>> {
    let s = state.time;
    let g = &state.grid;
    state
        .fields()
        .iter()
        .flat_map(|f| {
            let v = (0..g.len()).map(|i| s / t_of(s, g.r(i)) * f.dt[i]).collect();
            [f.value.clone(), v]
        })
        .collect()
}

fn unpack(state: &EvolutionState, y: Vec<Vec<f64>>, s: f64) -> EvolutionState {
    let mut next = state.clone();
    next.time = s;
    let g = state.grid;
    let mut it = y.into_iter();
    for f in next.fields_mut() {
        f.value = it.next().expect("value channel");
        let v = it.next().expect("rate channel");
        f.dt = (0..g.len()).map(|i| t_of(s, g.r(i)) / s * v[i]).collect();
    }
    next
}

fn rhs(
    s: f64,
    y: &[Vec<f64>],
    grid: &RadialGrid,
    model: &ModelSystem,
    scheme: &SchemeConfig,
) -> Vec<Vec<f64>> {
    let n = grid.len();
    let h = grid.dr();
    let unknowns = y.len() / 2;
    let t: Vec<f64> = (0..n).map(|i| t_of(s, grid.r(i))).collect();
    let along: Vec<Vec<f64>> = (0..unknowns).map(|k| d_r(&y[2 * k], h)).collect();
    // Minkowski derivatives from the slice data
    let time_rate = |k: usize, i: usize| t[i] / s * y[2 * k + 1][i];
    let radial = |k: usize, i: usize| along[k][i] - grid.r(i) / t[i] * time_rate(k, i);
    let mut forcing = Vec::with_capacity(n);
    for i in 0..n {
        let mut p = PointValues {
            u: y[0][i],
            u_t: time_rate(0, i),
            u_r: radial(0, i),
            phi: y[2][i],
            phi_t: time_rate(1, i),
            phi_r: radial(1, i),
            ..PointValues::default()
        };
        if unknowns == 3 {
            p.rho = y[4][i];
            p.rho_t = time_rate(2, i);
            p.rho_r = radial(2, i);
        }
        forcing.push(model.forcing(&p, scheme.stiff));
    }
    let r_max = grid.r_max();
    let mut out = vec![vec![0.0; n]; y.len()];
    let mut lap = vec![0.0; n];
    for k in 0..unknowns {
        let (w, v) = (&y[2 * k], &y[2 * k + 1]);
        laplacian(w, grid, &mut lap);
        let dv = d_r(v, h);
        let (head, tail) = out.split_at_mut(2 * k + 1);
        let dw_out = &mut head[2 * k];
        let dv_out = &mut tail[0];
        for i in 0..n - 1 {
            let x = grid.r(i);
            let f = match k {
                0 => forcing[i].u,
                1 => forcing[i].phi,
                _ => forcing[i].rho,
            };
            let sponge = if k > 0 { scheme.sponge(x, r_max) } else { 0.0 };
            dw_out[i] = v[i];
            dv_out[i] = lap[i] - 2.0 * x / s * dv[i] - 3.0 / s * v[i] + f - sponge * t[i] / s * v[i];
        }
        // (∂_t + ∂_r + 1/r)u = 0 written along the slice
        let last = n - 1;
        let x = grid.r(last);
        let tl = t[last];
        let gap = tl - x;
        let g = along[k][last] + w[last] / x;
        dw_out[last] = -s / gap * g;
        dv_out[last] = x / (tl * gap) * g - s / gap * (dv[last] + v[last] / x);
        add_dissipation(w, dw_out, scheme.dissipation, h);
        add_dissipation(v, dv_out, scheme.dissipation, h);
    }
    out
}

pub(super) fn step(
    state: &EvolutionState,
    model: &ModelSystem,
    scheme: &SchemeConfig,
    ds: f64,
) -> Result<EvolutionState, EvolutionError> {
    let grid = state.grid;
    let mut y = pack(state);
    let split = scheme.stiff && y.len() == 6;
    let omega2 = model.kappa().map(|k| 1.0 / (3.0 * k)).unwrap_or(0.0);
    let interior = grid.len() - 1;
    let relax = |y: &mut Vec<Vec<f64>>| {
        let (w, v) = y.split_at_mut(5);
        oscillator_cn(&mut w[4], &mut v[0], omega2, 0.5 * ds, interior);
    };
    if split {
        relax(&mut y);
    }
    let mut y = rk4(&y, state.time, ds, |s, y| Ok(rhs(s, y, &grid, model, scheme)))?;
    if split {
        relax(&mut y);
    }
    Ok(unpack(state, y, state.time + ds))
}
