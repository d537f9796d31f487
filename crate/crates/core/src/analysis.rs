//! Boost-based slice norms, interval norms, sup-norm series, decay fits
//! and energy monitoring.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evolution::{EvolutionError, EvolutionState, Field};
use crate::foliation::{d_r4, FoliationError, Parity, SliceChart, SliceKind};
use crate::models::{channel_jets, radial_derivative, ChannelJet, ModelError, ModelSystem};

/// Highest supported order of boosts and translations.
pub const MAX_ORDER: usize = 2;
/// Minimum number of slices for interval norms, fits and monitoring.
pub const MIN_SLICES: usize = 10;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("order {0} unsupported (maximum {MAX_ORDER})")]
    Order(usize),
    #[error("second-order norms on flat slices need the model equations")]
    MissingModel,
    #[error("{got} slices in range, need at least {MIN_SLICES}")]
    TooFewSlices { got: usize },
    #[error("nonpositive value {value} at s = {s} inside the fit window")]
    NonPositive { s: f64, value: f64 },
    #[error("fit window [{lo}, {hi}] is not inside the series range [{first}, {last}]")]
    Window { lo: f64, hi: f64, first: f64, last: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Foliation(#[from] FoliationError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

/// `∫ f² 4πr² dr` by the trapezoid rule on the nodes.
pub fn integrate_squared(f: &[f64], chart: &SliceChart) -> f64 {
    let g = chart.grid();
    let n = g.len();
    let mut acc = 0.0;
    for (i, v) in f.iter().enumerate() {
        let r = g.r(i);
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        acc += w * v * v * r * r;
    }
    4.0 * PI * acc * g.dr()
}

/// `L f` for a slice function with Minkowski derivatives `f_t`, `f_r`.
/// On a hyperboloid the boost is tangent, so only the values are used.
fn boost(f: &[f64], f_t: &[f64], f_r: &[f64], parity: Parity, chart: &SliceChart) -> Vec<f64> {
    let g = chart.grid();
    match chart.kind() {
        SliceKind::Flat { t } => (0..g.len()).map(|i| g.r(i) * f_t[i] + t * f_r[i]).collect(),
        SliceKind::Hyperboloid { .. } => {
            let d = d_r4(f, g.dr(), parity);
            (0..g.len()).map(|i| chart.t_at(i) * d[i]).collect()
        }
    }
}

/// `[w, Lw, L²w]` truncated to order `n`.
fn boost_ladder(jet: &ChannelJet, n: usize, chart: &SliceChart) -> Vec<Vec<f64>> {
    let g = chart.grid();
    let mut out = vec![jet.value.clone()];
    if n >= 1 {
        out.push(boost(&jet.value, &jet.t, &jet.r, Parity::Even, chart));
    }
    if n >= 2 {
        let second = match chart.kind() {
            // L²u = r²u_tt + r u_r + 2rt u_tr + t u_t + t² u_rr
            SliceKind::Flat { t } => (0..g.len())
                .map(|i| {
                    let r = g.r(i);
                    r * r * jet.tt[i] + r * jet.r[i] + 2.0 * r * t * jet.tr[i] + t * jet.t[i] + t * t * jet.rr[i]
                })
                .collect(),
            SliceKind::Hyperboloid { .. } => boost(&out[1], &[], &[], Parity::Odd, chart),
        };
        out.push(second);
    }
    out
}

/// Jets without the model: enough for boosts of order ≤ 1.
fn first_order_jets(state: &EvolutionState, chart: &SliceChart) -> Result<Vec<ChannelJet>, AnalysisError> {
    state
        .fields()
        .into_iter()
        .map(|f: &Field| {
            let r = radial_derivative(f, chart)?;
            Ok(ChannelJet {
                value: f.value.clone(),
                t: f.dt.clone(),
                r,
                tt: Vec::new(),
                tr: Vec::new(),
                rr: Vec::new(),
            })
        })
        .collect()
}

fn jets_for(
    state: &EvolutionState,
    chart: &SliceChart,
    order: usize,
    model: Option<&ModelSystem>,
) -> Result<Vec<ChannelJet>, AnalysisError> {
    match model {
        Some(m) => Ok(channel_jets(m, state, chart)?),
        None if order >= 2 && matches!(chart.kind(), SliceKind::Flat { .. }) => Err(AnalysisError::MissingModel),
        None => first_order_jets(state, chart),
    }
}

/// `[E_0, E_1, E_2]` on the state's slice, summed over the unknowns,
/// with `E_n = Σ_{j ≤ n} ∫ |L^j w|²`. Entries above `order` repeat the
/// highest computed one.
pub fn slice_energies(
    state: &EvolutionState,
    order: usize,
    model: Option<&ModelSystem>,
) -> Result<[f64; 3], AnalysisError> {
    if order > MAX_ORDER {
        return Err(AnalysisError::Order(order));
    }
    let chart = state.chart()?;
    let jets = jets_for(state, &chart, order, model)?;
    let mut parts = [0.0; 3];
    for jet in &jets {
        for (j, l) in boost_ladder(jet, order, &chart).iter().enumerate() {
            parts[j] += integrate_squared(l, &chart);
        }
    }
    let mut e = [0.0; 3];
    let mut acc = 0.0;
    for j in 0..3 {
        if j <= order {
            acc += parts[j];
        }
        e[j] = acc;
    }
    Ok(e)
}

/// `‖w‖_{H^n[s]}` over all unknowns of the state.
pub fn slice_norm(state: &EvolutionState, n: usize, model: Option<&ModelSystem>) -> Result<f64, AnalysisError> {
    Ok(slice_energies(state, n, model)?[n].sqrt())
}

/// `Σ_{|I| + n ≤ N} ‖∂^I w‖_{H^n}` on one slice, with `∂^I` ranging over
/// products of `∂_t` and `∂_r`.
pub fn translated_norm(state: &EvolutionState, order: usize, model: &ModelSystem) -> Result<f64, AnalysisError> {
    if order > MAX_ORDER {
        return Err(AnalysisError::Order(order));
    }
    let chart = state.chart()?;
    let jets = channel_jets(model, state, &chart)?;
    // one entry per (I, n): squared norm summed over unknowns
    let mut terms: Vec<f64> = Vec::new();
    let mut add = |k: usize, v: f64| {
        if terms.len() <= k {
            terms.resize(k + 1, 0.0);
        }
        terms[k] += v;
    };
    for jet in &jets {
        let ladder = boost_ladder(jet, order, &chart);
        let mut acc = 0.0;
        for (n, l) in ladder.iter().enumerate() {
            acc += integrate_squared(l, &chart);
            add(n, acc);
        }
        if order >= 1 {
            let l_t = boost(&jet.t, &jet.tt, &jet.tr, Parity::Even, &chart);
            let l_r = boost(&jet.r, &jet.tr, &jet.rr, Parity::Odd, &chart);
            let base = order + 1;
            let (e_t, e_r) = (integrate_squared(&jet.t, &chart), integrate_squared(&jet.r, &chart));
            add(base, e_t);
            add(base + 1, e_r);
            if order >= 2 {
                add(base + 2, e_t + integrate_squared(&l_t, &chart));
                add(base + 3, e_r + integrate_squared(&l_r, &chart));
                for (k, f) in [&jet.tt, &jet.tr, &jet.rr].into_iter().enumerate() {
                    add(base + 4 + k, integrate_squared(f, &chart));
                }
            }
        }
    }
    // (I = ∅, n ≤ N), then (|I| = 1, n ≤ N − 1), then (|I| = 2, n = 0)
    let sqrt = |k: usize| terms.get(k).copied().unwrap_or(0.0).sqrt();
    let mut total = 0.0;
    for n in 0..=order {
        total += sqrt(n);
    }
    let base = order + 1;
    match order {
        0 => {}
        1 => total += sqrt(base) + sqrt(base + 1),
        _ => {
            total += sqrt(base) + sqrt(base + 1) + sqrt(base + 2) + sqrt(base + 3);
            total += sqrt(base + 4) + sqrt(base + 5) + sqrt(base + 6);
        }
    }
    Ok(total)
}

/// Supremum over the slices with time in `window` of [`translated_norm`].
pub fn interval_norm(
    slices: &[EvolutionState],
    order: usize,
    window: (f64, f64),
    model: &ModelSystem,
) -> Result<f64, AnalysisError> {
    let inside: Vec<&EvolutionState> = slices
        .iter()
        .filter(|s| s.time >= window.0 - 1e-12 && s.time <= window.1 + 1e-12)
        .collect();
    if inside.len() < MIN_SLICES {
        return Err(AnalysisError::TooFewSlices { got: inside.len() });
    }
    inside
        .into_iter()
        .try_fold(0.0f64, |acc, s| Ok(acc.max(translated_norm(s, order, model)?)))
}

pub fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Per-slice summary written to the series files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub time: f64,
    pub sup_u: f64,
    pub sup_phi: f64,
    pub energies: [f64; 3],
}

/// Sup norms and energies up to `order` (see [`slice_energies`]).
pub fn record(state: &EvolutionState, model: &ModelSystem, order: usize) -> Result<Record, AnalysisError> {
    Ok(Record {
        time: state.time,
        sup_u: sup_abs(&state.u.value),
        sup_phi: sup_abs(&state.phi.value),
        energies: slice_energies(state, order, Some(model))?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub residual_std_error: f64,
}

/// Least-squares slope of `log y` against `log s` over the window.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit, AnalysisError> {
    let (lo, hi) = window;
    let first = series.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let last = series.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-9 * hi.abs().max(1.0);
    if !(lo < hi) || lo < first - slack || hi > last + slack {
        return Err(AnalysisError::Window { lo, hi, first, last });
    }
    let mut pts = Vec::new();
    for &(s, y) in series.iter().filter(|(s, _)| *s >= lo - slack && *s <= hi + slack) {
        if !(y > 0.0) || s <= 0.0 {
            return Err(AnalysisError::NonPositive { s, value: y });
        }
        pts.push((s.ln(), y.ln()));
    }
    let m = pts.len();
    if m < MIN_SLICES {
        return Err(AnalysisError::TooFewSlices { got: m });
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m as f64;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(DecayFit {
        exponent: slope,
        intercept,
        window,
        samples: m,
        residual_std_error: (rss / (m as f64 - 2.0)).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Amplified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub verdict: Verdict,
    pub worst_ratio: f64,
    pub worst_time: f64,
}

/// Bounded iff `max E(s) ≤ factor · E(s₀)` over the series `(s, E)`.
pub fn energy_monitor(series: &[(f64, f64)], factor: f64) -> Result<MonitorReport, AnalysisError> {
    if series.len() < MIN_SLICES {
        return Err(AnalysisError::TooFewSlices { got: series.len() });
    }
    let e0 = series[0].1;
    let mut worst = (0.0, series[0].0);
    for &(s, e) in series {
        let ratio = if e0 > 0.0 {
            e / e0
        } else if e > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > worst.0 {
            worst = (ratio, s);
        }
    }
    let bounded = series.iter().all(|&(_, e)| e <= factor * e0);
    Ok(MonitorReport {
        verdict: if bounded { Verdict::Bounded } else { Verdict::Amplified },
        worst_ratio: worst.0,
        worst_time: worst.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::Mode;
    use crate::foliation::RadialGrid;

    #[test]
    fn exact_power_laws() {
        let s: Vec<(f64, f64)> = (0..40).map(|k| 5.0 + k as f64).map(|s| (s, 7.0 / s)).collect();
        let f = fit_decay(&s, (5.0, 44.0)).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        let s: Vec<(f64, f64)> = (0..40).map(|k| 5.0 + k as f64).map(|s| (s, 3.0 * s.powf(-1.5))).collect();
        assert!((fit_decay(&s, (5.0, 44.0)).unwrap().exponent + 1.5).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_values_rejected() {
        let s: Vec<(f64, f64)> = (0..20).map(|k| (1.0 + k as f64, if k == 5 { 0.0 } else { 1.0 })).collect();
        assert!(matches!(fit_decay(&s, (1.0, 20.0)), Err(AnalysisError::NonPositive { .. })));
    }

    #[test]
    fn monitor_flags_growth() {
        let grow: Vec<(f64, f64)> = (0..12).map(|k| (k as f64, (k as f64).exp())).collect();
        assert_eq!(energy_monitor(&grow, 2.0).unwrap().verdict, Verdict::Amplified);
        let zero: Vec<(f64, f64)> = (0..12).map(|k| (k as f64, 0.0)).collect();
        let r = energy_monitor(&zero, 2.0).unwrap();
        assert_eq!((r.verdict, r.worst_ratio), (Verdict::Bounded, 0.0));
    }

    #[test]
    fn zero_state_has_zero_norms() {
        let grid = RadialGrid::new(0.1, 30).unwrap();
        let st = EvolutionState::zeros(Mode::Cartesian, 2.0, grid, false);
        assert_eq!(slice_energies(&st, 1, None).unwrap(), [0.0; 3]);
        assert!(matches!(slice_energies(&st, 2, None), Err(AnalysisError::MissingModel)));
    }
}
