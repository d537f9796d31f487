use approx::assert_relative_eq;

use wkglab_core::evolution::{EvolutionState, Mode, SchemeConfig};
use wkglab_core::foliation::RadialGrid;
use wkglab_core::kappa_limit::{algebraic_rho, sweep, KappaError, SweepConfig};
use wkglab_core::models::{InitialData, Profile, WkgModel};

const EIGHT_PI: f64 = 8.0 * std::f64::consts::PI;

fn phi_state(f: impl Fn(f64) -> (f64, f64)) -> EvolutionState {
    let grid = RadialGrid::covering(0.05, 3.0).unwrap();
    let mut st = EvolutionState::zeros(Mode::Cartesian, 1.7, grid, false);
    for i in 0..grid.len() {
        (st.phi.value[i], st.phi.dt[i]) = f(grid.r(i));
    }
    st
}

#[test]
fn algebraic_limit_of_trivial_fields() {
    assert!(algebraic_rho(&phi_state(|_| (0.0, 0.0)), 1.0).unwrap().iter().all(|v| *v == 0.0));
    for v in algebraic_rho(&phi_state(|_| (1.0, 0.0)), 1.0).unwrap() {
        assert_relative_eq!(v, 4.0 * std::f64::consts::PI, epsilon = 1e-13);
    }
    assert_relative_eq!(4.0 * std::f64::consts::PI, 12.56637, epsilon = 1e-5);
}

#[test]
fn algebraic_limit_matches_symbolic_derivatives() {
    // φ = cos(t)(1 + 0.3r²): the radial stencils are exact on quadratics
    let t: f64 = 1.7;
    let c = 1.4;
    let st = phi_state(|r| (t.cos() * (1.0 + 0.3 * r * r), -t.sin() * (1.0 + 0.3 * r * r)));
    let got = algebraic_rho(&st, c).unwrap();
    for (i, v) in got.iter().enumerate() {
        let r = st.grid.r(i);
        let phi = t.cos() * (1.0 + 0.3 * r * r);
        let phi_t = -t.sin() * (1.0 + 0.3 * r * r);
        let phi_r = 0.6 * r * t.cos();
        let expected = EIGHT_PI * (-phi_t * phi_t + phi_r * phi_r + 0.5 * c * c * phi * phi);
        assert!((v - expected).abs() <= 1e-12 * expected.abs().max(1.0), "r = {r}");
    }
}

fn base_config(kappas: Vec<f64>) -> SweepConfig {
    let mut data = InitialData::zero();
    data.support_radius = 4.0;
    data.epsilon = 0.01;
    data.u0 = Profile::Bump {
        amplitude: 1.0,
        radius: 4.0,
    };
    data.phi0 = data.u0;
    SweepConfig {
        kappas,
        data,
        model: WkgModel::new(0.5, true, 1.0, 0.1).unwrap(),
        q: 1.0,
        dr: 0.05,
        r_max: 16.0,
        scheme: SchemeConfig {
            stiff: true,
            ..SchemeConfig::default()
        },
        start: 5.0,
        end: 9.0,
        cadence: 0.2,
    }
}

#[test]
fn zero_data_gives_zero_errors() {
    let mut cfg = base_config(vec![0.1, 0.05, 0.025]);
    cfg.data = InitialData::zero();
    let report = sweep(&cfg).unwrap();
    assert_eq!(report.rows.len(), 3);
    for row in &report.rows {
        assert_eq!((row.err_rho, row.err_u, row.err_phi), (0.0, 0.0, 0.0));
    }
    // log of zero errors: no slope
    assert_eq!(report.slope_rho, None);
}

#[test]
fn errors_decrease_along_halving_kappas() {
    let report = sweep(&base_config(vec![0.1, 0.05, 0.025])).unwrap();
    assert!(report.failed.is_empty());
    assert_eq!(report.q, 1.0);
    assert!(report.rho_strictly_decreasing(), "{:?}", report.rows);
    assert!(report.slope_rho.unwrap() > 0.0);
}

#[test]
fn invalid_kappa_lists_are_rejected() {
    for kappas in [vec![], vec![0.1, 0.1], vec![0.05, 0.1], vec![0.1, -0.05]] {
        assert!(matches!(sweep(&base_config(kappas)), Err(KappaError::Config(_))));
    }
}

#[test]
fn diverging_member_is_reported_and_excluded() {
    // without the implicit treatment the smallest κ exceeds the explicit limit
    let mut cfg = base_config(vec![0.1, 1e-5]);
    cfg.scheme.stiff = false;
    cfg.end = 5.6;
    let report = sweep(&cfg).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.failed.len(), 1);
    assert_eq!(report.failed[0].0, 1e-5);
    assert_eq!(report.slope_rho, None);
}
