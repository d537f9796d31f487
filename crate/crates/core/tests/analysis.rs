use approx::assert_relative_eq;
use proptest::prelude::*;

use wkglab_core::analysis::{
    energy_monitor, fit_decay, interval_norm, record, slice_energies, slice_norm, translated_norm, AnalysisError,
    Verdict,
};
use wkglab_core::evolution::{run, EvolutionState, Mode, RunSpec, SchemeConfig};
use wkglab_core::foliation::{RadialGrid, SliceChart};
use wkglab_core::models::{InitialData, ModelSystem, Profile, WkgModel};

fn linear() -> ModelSystem {
    ModelSystem::Wkg(WkgModel::linear(1.0).unwrap())
}

fn gaussian_state(t: f64, dr: f64, r_max: f64) -> EvolutionState {
    let grid = RadialGrid::covering(dr, r_max).unwrap();
    let mut st = EvolutionState::zeros(Mode::Cartesian, t, grid, false);
    for i in 0..grid.len() {
        let r = grid.r(i);
        st.u.value[i] = (-r * r).exp();
    }
    st
}

#[test]
fn gaussian_norm_matches_closed_form() {
    let st = gaussian_state(2.0, 0.001, 8.0);
    let n0 = slice_norm(&st, 0, None).unwrap();
    assert_relative_eq!(n0 * n0, (std::f64::consts::PI / 2.0).powf(1.5), max_relative = 1e-6);
}

/// Composite Simpson rule for `∫₀^R f(r) 4πr² dr`.
fn simpson(f: impl Fn(f64) -> f64, r_max: f64, n: usize) -> f64 {
    let h = r_max / n as f64;
    let g = |r: f64| f(r) * r * r;
    let mut acc = g(0.0) + g(r_max);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
    }
    4.0 * std::f64::consts::PI * acc * h / 3.0
}

#[test]
fn first_order_energy_matches_closed_form_boost() {
    // u = cos(t)·exp(−r²) on the slice t = 1.3; Lu = r u_t + t u_r
    let t: f64 = 1.3;
    let grid = RadialGrid::covering(0.002, 7.0).unwrap();
    let mut st = EvolutionState::zeros(Mode::Cartesian, t, grid, false);
    for i in 0..grid.len() {
        let g = (-grid.r(i).powi(2)).exp();
        st.u.value[i] = t.cos() * g;
        st.u.dt[i] = -t.sin() * g;
    }
    let lu = |r: f64| {
        let g = (-r * r).exp();
        -r * t.sin() * g - 2.0 * r * t * t.cos() * g
    };
    let e0 = simpson(|r| (t.cos() * (-r * r).exp()).powi(2), 7.0, 20_000);
    let e1 = e0 + simpson(|r| lu(r).powi(2), 7.0, 20_000);
    let got = slice_energies(&st, 1, None).unwrap();
    assert_relative_eq!(got[0], e0, max_relative = 1e-8);
    assert_relative_eq!(got[1], e1, max_relative = 1e-8);
}

#[test]
fn zero_state_norms_vanish() {
    let grid = RadialGrid::covering(0.05, 4.0).unwrap();
    for mode in [Mode::Cartesian, Mode::Hyperboloidal] {
        let st = EvolutionState::zeros(mode, 2.0, grid, false);
        assert_eq!(slice_energies(&st, 2, Some(&linear())).unwrap(), [0.0; 3]);
        assert_eq!(translated_norm(&st, 2, &linear()).unwrap(), 0.0);
    }
}

fn static_slices(count: usize) -> Vec<EvolutionState> {
    let grid = RadialGrid::covering(0.05, 3.0).unwrap();
    (0..count)
        .map(|k| {
            let mut st = EvolutionState::zeros(Mode::Cartesian, 2.0 + 0.5 * k as f64, grid, false);
            st.u.value.iter_mut().for_each(|v| *v = 1.0);
            st
        })
        .collect()
}

#[test]
fn interval_norm_of_a_static_solution_is_any_slice_value() {
    let slices = static_slices(12);
    for order in 0..=2 {
        let single = translated_norm(&slices[3], order, &linear()).unwrap();
        let sup = interval_norm(&slices, order, (2.0, 7.5), &linear()).unwrap();
        assert_relative_eq!(sup, single, max_relative = 1e-12);
    }
    // N = 0 collapses to the slice norm
    let n0 = slice_norm(&slices[0], 0, None).unwrap();
    assert_relative_eq!(translated_norm(&slices[0], 0, &linear()).unwrap(), n0, max_relative = 1e-15);
}

#[test]
fn interval_norm_needs_ten_slices() {
    let slices = static_slices(9);
    assert!(matches!(
        interval_norm(&slices, 1, (0.0, 100.0), &linear()),
        Err(AnalysisError::TooFewSlices { got: 9 })
    ));
}

#[test]
fn linear_klein_gordon_energy_stays_bounded() {
    let model = linear();
    let grid = RadialGrid::covering(0.02, 16.0).unwrap();
    let chart = SliceChart::flat(2.0, grid).unwrap();
    let mut data = InitialData::zero();
    data.epsilon = 1.0;
    data.phi0 = Profile::Bump {
        amplitude: 1.0,
        radius: 1.0,
    };
    let mut series = Vec::new();
    let spec = RunSpec {
        end: 8.0,
        cadence: 0.5,
        keep_history: false,
        keep_snapshots: false,
    };
    run(
        EvolutionState::from_data(&data, &model, &chart).unwrap(),
        &model,
        &SchemeConfig::default(),
        &spec,
        |st| {
            let rec = record(st, &model, 0).unwrap();
            series.push((rec.time, rec.energies[0]));
            Ok(())
        },
    )
    .unwrap();
    let report = energy_monitor(&series, 2.0).unwrap();
    assert_eq!(report.verdict, Verdict::Bounded);
}

#[test]
fn exponential_growth_is_amplified() {
    let series: Vec<(f64, f64)> = (0..20).map(|k| (2.0 + 0.5 * k as f64, (0.5 * k as f64).exp())).collect();
    let report = energy_monitor(&series, 2.0).unwrap();
    assert_eq!(report.verdict, Verdict::Amplified);
    assert_eq!(report.worst_time, 11.5);
}

fn smooth_state(mode: Mode, time: f64, coeffs: [f64; 4]) -> EvolutionState {
    let grid = RadialGrid::covering(0.05, 5.0).unwrap();
    let mut st = EvolutionState::zeros(mode, time, grid, false);
    for i in 0..grid.len() {
        let r = grid.r(i);
        let g = (-r * r).exp();
        st.u.value[i] = coeffs[0] * g + coeffs[1] * r * r * g;
        st.u.dt[i] = coeffs[1] * g;
        st.phi.value[i] = coeffs[2] * (-2.0 * r * r).exp();
        st.phi.dt[i] = coeffs[3] * r * r * g;
    }
    st
}

proptest! {
    #[test]
    fn fit_recovers_exact_power_laws(a in 0.01f64..100.0, p in -3.0f64..0.0) {
        let series: Vec<(f64, f64)> = (0..60).map(|k| 2.0 + k as f64).map(|s| (s, a * s.powf(p))).collect();
        let fit = fit_decay(&series, (5.0, 50.0)).unwrap();
        prop_assert!((fit.exponent - p).abs() <= 1e-12);
        prop_assert!((fit.intercept - a.ln()).abs() <= 1e-10);
    }

    #[test]
    fn energies_are_monotone_in_order(
        coeffs in prop::array::uniform4(-2.0f64..2.0),
        time in 1.0f64..10.0,
        hyperboloidal in any::<bool>(),
    ) {
        let mode = if hyperboloidal { Mode::Hyperboloidal } else { Mode::Cartesian };
        let st = smooth_state(mode, time, coeffs);
        let model = ModelSystem::Wkg(WkgModel::new(1.0, true, 1.0, 0.1).unwrap());
        let e = slice_energies(&st, 2, Some(&model)).unwrap();
        prop_assert!(0.0 <= e[0] && e[0] <= e[1] && e[1] <= e[2]);
    }
}
