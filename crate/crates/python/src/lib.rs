//! Python bindings: configs, runs, slice norms, decay fits, κ sweeps and
//! the symbolic identity check.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use wkglab_core::analysis::{self, Record, Verdict};
use wkglab_core::config::{self, RunConfig};
use wkglab_core::evolution::{self, checkpoint, EvolutionState, RunSpec};
use wkglab_core::kappa_limit;
use wkglab_core::models::ModelSystem;
use wkglab_core::tensor;

fn invalid(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A validated run configuration.
#[pyclass(name = "Config", frozen, from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyConfig {
            inner: config::parse_config(text).map_err(invalid)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyConfig {
            inner: config::load_config(&path).map_err(invalid)?,
        })
    }

    /// Canonical text with every default filled in.
    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.run.mode.name()
    }

    #[getter]
    fn start(&self) -> f64 {
        self.inner.run.start
    }

    #[getter]
    fn end(&self) -> f64 {
        self.inner.run.end
    }

    fn __eq__(&self, other: &PyConfig) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Config(mode={}, start={}, end={})", self.mode(), self.start(), self.end())
    }
}

/// Unknowns on one slice, with the model that drives them.
#[pyclass(name = "State", frozen)]
struct PyState {
    state: EvolutionState,
    model: ModelSystem,
}

#[pymethods]
impl PyState {
    /// `t` on flat slices, `s` on hyperboloids.
    #[getter]
    fn time(&self) -> f64 {
        self.state.time
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.state.mode.name()
    }

    #[getter]
    fn r(&self) -> Vec<f64> {
        self.state.grid.nodes()
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.state.u.value.clone()
    }

    #[getter]
    fn u_t(&self) -> Vec<f64> {
        self.state.u.dt.clone()
    }

    #[getter]
    fn phi(&self) -> Vec<f64> {
        self.state.phi.value.clone()
    }

    #[getter]
    fn phi_t(&self) -> Vec<f64> {
        self.state.phi.dt.clone()
    }

    #[getter]
    fn rho(&self) -> Option<Vec<f64>> {
        self.state.rho.as_ref().map(|f| f.value.clone())
    }

    /// `sqrt(E_n)` on this slice.
    fn slice_norm(&self, n: usize) -> PyResult<f64> {
        analysis::slice_norm(&self.state, n, Some(&self.model)).map_err(invalid)
    }

    /// `[E_0, E_1, E_2]` up to `order`.
    #[pyo3(signature = (order = 2))]
    fn energies(&self, order: usize) -> PyResult<[f64; 3]> {
        analysis::slice_energies(&self.state, order, Some(&self.model)).map_err(invalid)
    }

    /// `ρ_alg` of this slice's `φ`.
    fn algebraic_rho(&self) -> PyResult<Vec<f64>> {
        kappa_limit::algebraic_rho(&self.state, self.model.c()).map_err(invalid)
    }

    fn to_checkpoint(&self) -> Vec<u8> {
        checkpoint::encode(&self.state, &self.model)
    }

    #[staticmethod]
    fn from_checkpoint(bytes: Vec<u8>) -> PyResult<Self> {
        let ck = checkpoint::decode(&bytes).map_err(invalid)?;
        Ok(PyState {
            state: ck.state,
            model: ck.model,
        })
    }

    fn __repr__(&self) -> String {
        format!("State(mode={}, time={}, nodes={})", self.mode(), self.time(), self.state.grid.len())
    }
}

/// `(s, sup_u, sup_phi, E0, E1, E2)`.
type Row = (f64, f64, f64, f64, f64, f64);

fn record_tuple(r: &Record) -> Row {
    let [e0, e1, e2] = r.energies;
    (r.time, r.sup_u, r.sup_phi, e0, e1, e2)
}

/// Initial slice described by `config`.
#[pyfunction]
fn initial_state(config: &PyConfig) -> PyResult<PyState> {
    let (state, model) = wkglab_core::cli::initial_state(&config.inner).map_err(invalid)?;
    Ok(PyState { state, model })
}

/// Runs `config` and returns the series rows `(s, sup_u, sup_phi, E0, E1, E2)`
/// and the final state.
#[pyfunction]
fn simulate(py: Python<'_>, config: &PyConfig) -> PyResult<(Vec<Row>, PyState)> {
    let cfg = config.inner.clone();
    let (initial, model) = wkglab_core::cli::initial_state(&cfg).map_err(invalid)?;
    let spec = RunSpec {
        end: cfg.run.end,
        cadence: cfg.run.cadence,
        keep_history: false,
        keep_snapshots: false,
    };
    let order = cfg.run.analysis_order;
    let (records, final_state) = py.detach(|| {
        let mut records = Vec::new();
        let traj = evolution::run(initial, &model, &cfg.scheme, &spec, |st| {
            let rec = analysis::record(st, &model, order)
                .map_err(|e| evolution::EvolutionError::Observer(e.to_string()))?;
            records.push(rec);
            Ok(())
        })
        .map_err(runtime)?;
        Ok::<_, PyErr>((records, traj.final_state))
    })?;
    Ok((
        records.iter().map(record_tuple).collect(),
        PyState {
            state: final_state,
            model,
        },
    ))
}

/// Least-squares log-log slope: returns `(exponent, intercept, residual_std_error)`.
#[pyfunction]
fn fit_decay(s: Vec<f64>, y: Vec<f64>, window: (f64, f64)) -> PyResult<(f64, f64, f64)> {
    if s.len() != y.len() {
        return Err(invalid("s and y differ in length"));
    }
    let series: Vec<(f64, f64)> = s.into_iter().zip(y).collect();
    let f = analysis::fit_decay(&series, window).map_err(invalid)?;
    Ok((f.exponent, f.intercept, f.residual_std_error))
}

/// `(bounded, worst_ratio, worst_s)` for an energy series.
#[pyfunction]
#[pyo3(signature = (s, energy, factor = 2.0))]
fn energy_monitor(s: Vec<f64>, energy: Vec<f64>, factor: f64) -> PyResult<(bool, f64, f64)> {
    if s.len() != energy.len() {
        return Err(invalid("s and energy differ in length"));
    }
    let series: Vec<(f64, f64)> = s.into_iter().zip(energy).collect();
    let m = analysis::energy_monitor(&series, factor).map_err(invalid)?;
    Ok((m.verdict == Verdict::Bounded, m.worst_ratio, m.worst_time))
}

/// κ sweep over the data and grid of `config`. Returns the rows
/// `(kappa, err_rho, err_u, err_phi)` and the ρ slope (if defined).
#[pyfunction]
fn sweep_kappa(
    py: Python<'_>,
    config: &PyConfig,
    kappas: Vec<f64>,
) -> PyResult<(Vec<(f64, f64, f64, f64)>, Option<f64>)> {
    let sc = config.inner.sweep_config(kappas).map_err(invalid)?;
    let report = py.detach(|| kappa_limit::sweep(&sc)).map_err(|e| match e {
        kappa_limit::KappaError::Config(_) | kappa_limit::KappaError::Model(_) => invalid(e),
        _ => runtime(e),
    })?;
    if let Some((k, why)) = report.failed.first() {
        return Err(runtime(format!("kappa {k}: {why}")));
    }
    let rows = report
        .rows
        .iter()
        .map(|r| (r.kappa, r.err_rho, r.err_u, r.err_phi))
        .collect();
    Ok((rows, report.slope_rho))
}

/// Runs the wave-gauge identity check; returns `(passed, report text)`.
#[pyfunction]
#[pyo3(signature = (order = 2))]
fn verify_lemma(py: Python<'_>, order: usize) -> PyResult<(bool, String)> {
    let r = py.detach(|| tensor::verify_lemma(order)).map_err(invalid)?;
    Ok((r.passed(), r.render()))
}

#[pymodule]
fn wkglab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyState>()?;
    m.add_function(wrap_pyfunction!(initial_state, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay, m)?)?;
    m.add_function(wrap_pyfunction!(energy_monitor, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lemma, m)?)?;
    m.add("SERIES_HEADER", wkglab_core::io::SERIES_HEADER)?;
    Ok(())
}
