//! Command-line surface. Exit status 0 on success, 1 on validation errors
//! (bad arguments, bad config, missing files), 2 when a run aborts.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analysis::{energy_monitor, fit_decay, record, Record};
use crate::config::{load_config, RunConfig};
use crate::evolution::{checkpoint, run, EvolutionError, EvolutionState, Mode, RunSpec};
use crate::foliation::{RadialGrid, SliceChart};
use crate::io::{self, Outcome, RunManifest};
use crate::kappa_limit::{sweep, KappaError};
use crate::tensor::verify_lemma;

#[derive(Debug, Parser)]
#[command(name = "wkglab", version, about = "Wave-Klein-Gordon laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a configured run and write series.csv, a checkpoint and a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: run.output, else $WKGLAB_OUT/<config name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Symbolic checks of the Ricci expansion.
    Ricci {
        #[command(subcommand)]
        action: RicciAction,
    },
    /// Relaxation-limit sweep over κ against the κ = 0 reference.
    SweepKappa {
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',', required = true)]
        kappas: Vec<f64>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit `log sup|w|` against `log s` on a series file.
    DecayFit(DecayArgs),
    /// Check `E_n(s) ≤ factor · E_n(s₀)` on a series file.
    Energy {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 2.0)]
        factor: f64,
    },
    /// Read or validate checkpoint files.
    Checkpoint {
        #[command(subcommand)]
        action: CheckpointAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum RicciAction {
    Verify {
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Also write the report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CheckpointAction {
    Inspect { path: PathBuf },
    /// Decode and re-encode; succeeds iff the bytes are reproduced exactly.
    Verify { path: PathBuf },
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[arg(long)]
    input: PathBuf,
    /// `lo:hi` in slice time.
    #[arg(long, value_parser = parse_window)]
    window: (f64, f64),
    #[arg(long, default_value = "sup_u", value_parser = ["sup_u", "sup_phi"])]
    column: String,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if !(lo < hi) {
        return Err(format!("empty window {lo}:{hi}"));
    }
    Ok((lo, hi))
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit status. Messages go to stdout, errors to stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Validation(m) => eprintln!("error: {m}"),
                CliError::Runtime(m) => eprintln!("aborted: {m}"),
            }
            e.code()
        }
    }
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { config, out } => simulate(&config, out),
        Command::Ricci {
            action: RicciAction::Verify { order, report },
        } => ricci_verify(order, report.as_deref()),
        Command::SweepKappa { kappas, config, out } => sweep_kappa(kappas, &config, out),
        Command::DecayFit(args) => decay_fit(&args),
        Command::Energy { input, order, factor } => energy(&input, order, factor),
        Command::Checkpoint { action } => match action {
            CheckpointAction::Inspect { path } => inspect(&path),
            CheckpointAction::Verify { path } => verify_checkpoint(&path),
        },
    }
}

fn output_dir(explicit: Option<PathBuf>, cfg: &RunConfig, config_path: &Path, prefix: &str) -> PathBuf {
    explicit.or_else(|| cfg.run.output.clone()).unwrap_or_else(|| {
        let stem = config_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        io::output_root().join(format!("{prefix}{stem}"))
    })
}

/// Initial state described by a validated config.
pub fn initial_state(cfg: &RunConfig) -> Result<(EvolutionState, crate::models::ModelSystem), CliError> {
    let model = cfg.model_system().map_err(invalid)?;
    let grid = RadialGrid::covering(cfg.grid.dr, cfg.grid.r_max).map_err(invalid)?;
    let chart = match cfg.run.mode {
        Mode::Cartesian => SliceChart::flat(cfg.run.start, grid),
        Mode::Hyperboloidal => SliceChart::hyperboloidal(cfg.run.start, grid, false),
    }
    .map_err(invalid)?;
    let state = EvolutionState::from_data(&cfg.data.initial_data(), &model, &chart).map_err(invalid)?;
    Ok((state, model))
}

fn simulate(config_path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = load_config(config_path).map_err(invalid)?;
    let (initial, model) = initial_state(&cfg)?;
    let dir = output_dir(out, &cfg, config_path, "");
    let manifest = RunManifest::new("simulate", serde_json::to_value(&cfg).expect("config serializes"), io::unix_now());
    let spec = RunSpec {
        end: cfg.run.end,
        cadence: cfg.run.cadence,
        keep_history: false,
        keep_snapshots: false,
    };
    let order = cfg.run.analysis_order;
    let mut records: Vec<Record> = Vec::new();
    let result = run(initial, &model, &cfg.scheme, &spec, |st| {
        records.push(record(st, &model, order).map_err(|e| EvolutionError::Observer(e.to_string()))?);
        Ok(())
    });
    let write_series = |records: &[Record]| -> Result<(), CliError> {
        if records.is_empty() {
            return Ok(());
        }
        io::emit_series(records, &dir.join(io::SERIES_FILE)).map_err(runtime)
    };
    match result {
        Ok(traj) => {
            write_series(&records)?;
            if cfg.run.checkpoint {
                checkpoint::write(&dir.join("final.ckpt"), &traj.final_state, &model).map_err(runtime)?;
            }
            let summary = run_summary(&records, &cfg, traj.steps);
            manifest.finish(Outcome::Completed, summary, &dir).map_err(runtime)?;
            println!("completed {} steps, {} slices -> {}", traj.steps, records.len(), dir.display());
            Ok(())
        }
        Err(e) => {
            let reason = e.to_string();
            write_series(&records)?;
            manifest
                .finish(
                    Outcome::Aborted { reason: reason.clone() },
                    json!({ "slices": records.len(), "last": records.last() }),
                    &dir,
                )
                .map_err(runtime)?;
            Err(CliError::Runtime(reason))
        }
    }
}

fn run_summary(records: &[Record], cfg: &RunConfig, steps: usize) -> serde_json::Value {
    let lo = 5.0f64.max(cfg.run.start);
    let window = (lo, cfg.run.end);
    let column = |f: fn(&Record) -> f64| records.iter().map(|r| (r.time, f(r))).collect::<Vec<_>>();
    let energy = energy_monitor(&column(|r| r.energies[2]), 2.0).ok();
    json!({
        "steps": steps,
        "slices": records.len(),
        "final": records.last(),
        "decay_u": fit_decay(&column(|r| r.sup_u), window).ok(),
        "decay_phi": fit_decay(&column(|r| r.sup_phi), window).ok(),
        "energy": energy,
    })
}

fn ricci_verify(order: usize, report: Option<&Path>) -> Result<(), CliError> {
    let r = verify_lemma(order).map_err(invalid)?;
    let text = r.render();
    print!("{text}");
    if let Some(path) = report {
        std::fs::write(path, &text).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    }
    if !r.passed() {
        return Err(CliError::Runtime("identity check failed".into()));
    }
    Ok(())
}

fn sweep_kappa(kappas: Vec<f64>, config_path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = load_config(config_path).map_err(invalid)?;
    if cfg.run.mode != Mode::Cartesian {
        return Err(invalid("sweeps run in cartesian mode"));
    }
    let sc = cfg.sweep_config(kappas).map_err(invalid)?;
    sc.validate().map_err(invalid)?;
    let dir = output_dir(out, &cfg, config_path, "sweep-");
    let manifest = RunManifest::new("sweep-kappa", serde_json::to_value(&sc).expect("sweep serializes"), io::unix_now());
    match sweep(&sc) {
        Ok(report) => {
            io::write_kappa_report(&report, &dir).map_err(runtime)?;
            let outcome = if report.failed.is_empty() {
                Outcome::Completed
            } else {
                Outcome::Aborted {
                    reason: format!("{} κ runs failed", report.failed.len()),
                }
            };
            manifest
                .finish(outcome, serde_json::to_value(&report).expect("report serializes"), &dir)
                .map_err(runtime)?;
            print!("{}{}", io::kappa_report_csv(&report.rows), io::slope_summary(&report));
            for (k, why) in &report.failed {
                eprintln!("kappa {k}: {why}");
            }
            if report.failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Runtime("some sweep members aborted".into()))
            }
        }
        Err(e) => {
            let reason = e.to_string();
            manifest
                .finish(Outcome::Aborted { reason: reason.clone() }, serde_json::Value::Null, &dir)
                .map_err(runtime)?;
            Err(match e {
                KappaError::Config(_) | KappaError::Model(_) => CliError::Validation(reason),
                _ => CliError::Runtime(reason),
            })
        }
    }
}

fn decay_fit(args: &DecayArgs) -> Result<(), CliError> {
    let records = io::read_series(&args.input).map_err(invalid)?;
    let pick = |r: &Record| if args.column == "sup_u" { r.sup_u } else { r.sup_phi };
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.time, pick(r))).collect();
    let fit = fit_decay(&series, args.window).map_err(invalid)?;
    println!("exponent = {:.3}", fit.exponent);
    println!("intercept = {:.6}", fit.intercept);
    println!("samples = {}", fit.samples);
    println!("residual_std_error = {:.3e}", fit.residual_std_error);
    Ok(())
}

fn energy(input: &Path, order: usize, factor: f64) -> Result<(), CliError> {
    if order > crate::analysis::MAX_ORDER {
        return Err(invalid(format!("order {order} unsupported")));
    }
    let records = io::read_series(input).map_err(invalid)?;
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.time, r.energies[order])).collect();
    let m = energy_monitor(&series, factor).map_err(invalid)?;
    let verdict = serde_json::to_value(m.verdict).expect("verdict serializes");
    println!("verdict = {}", verdict.as_str().unwrap_or("?"));
    println!("worst_ratio = {:.6}", m.worst_ratio);
    println!("worst_s = {}", m.worst_time);
    Ok(())
}

fn inspect(path: &Path) -> Result<(), CliError> {
    let ck = checkpoint::read(path).map_err(invalid)?;
    let st = &ck.state;
    println!("mode = {}", st.mode.name());
    println!("time = {}", st.time);
    println!("dr = {}", st.grid.dr());
    println!("nodes = {}", st.grid.len());
    println!("model = {}", serde_json::to_string(&ck.model).expect("model serializes"));
    for (name, f) in ["u", "phi", "rho"].iter().zip(st.fields()) {
        println!("sup|{name}| = {:.6e}", crate::analysis::sup_abs(&f.value));
    }
    Ok(())
}

fn verify_checkpoint(path: &Path) -> Result<(), CliError> {
    let bytes = std::fs::read(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let ck = checkpoint::decode(&bytes).map_err(invalid)?;
    if checkpoint::encode(&ck.state, &ck.model) != bytes {
        return Err(invalid("re-encoding does not reproduce the file"));
    }
    println!("ok: bit-exact round trip");
    Ok(())
}
