//! `smaflow` command-line driver.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 solver or audit failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smaflow_core::audit::{self, DEFAULT_FLOOR_SLACK};
use smaflow_core::config::{self, PointModeKind};
use smaflow_core::coupler::{self, PointMode, StrainPath};
use smaflow_core::{output, DevTensor, Error, SimConfig, SymTensor};

#[derive(Parser, Debug)]
#[command(name = "smaflow", version, about = "Thermo-mechanical shape-memory-alloy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a full simulation and write the ledger, monitor and snapshots.
    Run(RunArgs),
    /// Drive a single material point through closed strain cycles.
    MaterialPoint(RunArgs),
    /// Parse and validate a configuration file.
    Validate(ConfigArgs),
    /// Re-check a saved timeseries.csv (or a run directory).
    Audit(AuditArgs),
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Configuration file (same as --config).
    path: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<Option<&Path>, Failure> {
        match (&self.path, &self.config) {
            (Some(_), Some(_)) => Err(Failure::usage("give the configuration either as a path or with --config, not both")),
            (p, c) => Ok(p.as_deref().or(c.as_deref())),
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Time step override.
    #[arg(long)]
    dt: Option<f64>,
    /// Number of steps; sets t_end = steps * dt.
    #[arg(long)]
    steps: Option<usize>,
    /// Reserved; the solver is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    /// timeseries.csv or a run directory containing it.
    path: PathBuf,
    /// Configuration providing the material parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fraction of the enthalpy floor below which a row is flagged.
    #[arg(long, default_value_t = DEFAULT_FLOOR_SLACK)]
    floor_slack: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Parse { .. } | Error::Format { .. } => 1,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

fn load_config(path: Option<&Path>) -> Result<SimConfig, Failure> {
    match path {
        None => Ok(SimConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::usage(format!("cannot read {}: {e}", p.display())))?;
            Ok(config::parse_config(&text)?)
        }
    }
}

fn check_threads() -> Result<(), Failure> {
    match std::env::var("SMAFLOW_THREADS") {
        Ok(v) if v.trim().parse::<usize>().map_or(true, |n| n == 0) => {
            Err(Failure::usage(format!("SMAFLOW_THREADS must be a positive integer, got {v:?}")))
        }
        _ => Ok(()),
    }
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(args.cfg.resolve()?)?.with_overrides(args.dt, args.steps)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    let traj = coupler::run_to_dir(&cfg, &out)?;
    let last = traj.ledger.rows().last().expect("ledger has the initial row");
    println!(
        "completed {} steps to t = {:.6}; min theta {:.6e}, sum |R| {:.3e}; output in {}",
        traj.steps.len(),
        last.t,
        traj.ledger.rows().iter().map(|r| r.min_theta).fold(f64::INFINITY, f64::min),
        traj.ledger.total_abs_residual(),
        out.display()
    );
    if !traj.report.flagged.is_empty() {
        println!("warning: global monitor flagged {} time levels", traj.report.flagged.len());
    }
    Ok(())
}

fn material_point(args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(args.cfg.resolve()?)?;
    let mp = &cfg.material_point;
    let dt = args.dt.unwrap_or(mp.period / mp.steps_per_cycle as f64);
    let t_end = match args.steps {
        Some(n) => n as f64 * dt,
        None => mp.cycles as f64 * mp.period,
    };
    let amp = DevTensor::new(mp.amplitude[0], mp.amplitude[1]).to_sym() + mp.volumetric * SymTensor::IDENTITY;
    let path = StrainPath::triangle_cycles(amp, mp.period, mp.cycles)?;
    let mode = match mp.mode {
        PointModeKind::Isothermal => PointMode::Isothermal { theta0: mp.theta0 },
        PointModeKind::Adiabatic => PointMode::Adiabatic { theta0: mp.theta0 },
    };
    let run = coupler::material_point_run(&path, mode, &cfg.material, dt, t_end)?;
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    std::fs::create_dir_all(&out).map_err(|e| Failure { code: 2, message: format!("{}: {e}", out.display()) })?;
    output::write_text(&out.join("point.csv"), &output::point_rows_to_string(&run.rows))?;
    output::write_text(&out.join("cycles.csv"), &output::cycles_to_string(&run.cycles))?;
    for c in &run.cycles {
        println!("cycle {}: loop area {:.6e}, dissipated {:.6e}", c.index, c.loop_area, c.dissipated);
    }
    println!("{} steps; output in {}", run.rows.len() - 1, out.display());
    Ok(())
}

fn validate(args: &ConfigArgs) -> Result<(), Failure> {
    let Some(path) = args.resolve()? else {
        return Err(Failure::usage("validate needs a configuration file"));
    };
    let cfg = load_config(Some(path))?;
    println!(
        "{}: valid ({}x{} cells, {} steps of dt = {})",
        path.display(),
        cfg.mesh.nx,
        cfg.mesh.ny,
        cfg.time.steps(),
        cfg.time.dt
    );
    Ok(())
}

fn audit_cmd(args: &AuditArgs) -> Result<(), Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let file = if args.path.is_dir() { args.path.join("timeseries.csv") } else { args.path.clone() };
    let rows = output::read_timeseries(&file)?;
    let findings = audit::check_ledger(&rows, &cfg.material, args.floor_slack);
    if findings.is_empty() {
        println!("audit passed: {} rows, all checks hold", rows.len());
        return Ok(());
    }
    for f in &findings {
        eprintln!("failed check {} at row {}: {}", f.check, f.row, f.detail);
    }
    Err(Failure { code: 2, message: format!("audit failed with {} finding(s)", findings.len()) })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = check_threads().and_then(|()| match &cli.command {
        Command::Run(a) => run(a),
        Command::MaterialPoint(a) => material_point(a),
        Command::Validate(a) => validate(a),
        Command::Audit(a) => audit_cmd(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
