//! Command-line front end.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::calibration::{calibrate, pfa_curve, write_pfa_curve_csv, CalibrationResult};
use crate::config::RunConfig;
use crate::error::Error;
use crate::montecarlo::{pd_curve, write_curve_csv};
use crate::scenario::{clutter_one_lag, cos_squared_theta, Scenario};
use crate::verify::{all_passed, run_checks};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "robust-detect",
    version,
    about = "Robust adaptive detection: calibration, Pd curves, self-checks"
)]
pub struct Cli {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the master seed of the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory; overrides `output_dir` of the configuration.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Thresholds for every configured detector (JSON).
    Calibrate,
    /// Closed-form Pfa against threshold (CSV).
    PfaCurve,
    /// Detection probability against SNR (CSV).
    PdCurve,
    /// Runs the self-check suite.
    Verify,
    /// Prints derived quantities of the configured scenario (JSON).
    ScenarioInfo,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(Error),
    Verification(usize),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
            CliError::Verification(_) => EXIT_VERIFY,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(e) => write!(f, "[{}] {e}", e.module()),
            CliError::Verification(n) => write!(f, "{n} verification check(s) failed"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.plan.seed = seed;
    }
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        cfg.plan.workers = Some(w);
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

fn cmd_calibrate(cfg: &RunConfig, out: &mut dyn Write) -> Result<Vec<CalibrationResult>, CliError> {
    let specs = cfg.detector_specs()?;
    let results = calibrate(&specs, &cfg.scenario, cfg.pfa, &cfg.threshold_plan())?;
    let json = serde_json::to_string_pretty(&results).map_err(|e| CliError::Io(e.to_string()))?;
    let (path, mut w) = create(&cfg.output_dir, "calibration.json")?;
    writeln!(w, "{json}")?;
    w.flush()?;
    writeln!(out, "{json}")?;
    log::info!("wrote {}", path.display());
    Ok(results)
}

fn cmd_pfa_curve(cfg: &RunConfig, out: &mut dyn Write) -> Result<PathBuf, CliError> {
    let etas = cfg.pfa_curve.etas();
    let mut rows = Vec::new();
    for &eps in &cfg.pfa_curve.epsilons {
        rows.extend(pfa_curve(&etas, cfg.scenario.k, cfg.scenario.n, eps)?);
    }
    let (path, mut w) = create(&cfg.output_dir, "pfa_curve.csv")?;
    write_pfa_curve_csv(&rows, &mut w)?;
    w.flush()?;
    writeln!(out, "wrote {} rows to {}", rows.len(), path.display())?;
    Ok(path)
}

/// File name of a Pd table, one per (scenario, pfa).
pub fn pd_curve_file_name(sc: &Scenario, pfa: f64) -> String {
    format!(
        "pd_curve_N{}_K{}_df{}_pfa{}.csv",
        sc.n, sc.k, sc.delta_f, pfa
    )
}

fn cmd_pd_curve(cfg: &RunConfig, out: &mut dyn Write) -> Result<PathBuf, CliError> {
    if cfg.detectors.is_empty() {
        return Err(CliError::Usage(
            "pd-curve needs at least one [[detector]]".into(),
        ));
    }
    if cfg.snr_grid_db.is_empty() {
        return Err(CliError::Usage(
            "pd-curve needs a non-empty snr_grid_db".into(),
        ));
    }
    let specs = cfg.detector_specs()?;
    let cal = calibrate(&specs, &cfg.scenario, cfg.pfa, &cfg.threshold_plan())?;
    let detectors: Vec<_> = cal.into_iter().map(|c| (c.detector, c.threshold)).collect();
    let points = pd_curve(
        &detectors,
        &cfg.snr_grid_db,
        &cfg.scenario,
        cfg.pfa,
        &cfg.pd_plan(),
    )?;
    let (path, mut w) = create(&cfg.output_dir, &pd_curve_file_name(&cfg.scenario, cfg.pfa))?;
    write_curve_csv(&points, &mut w)?;
    w.flush()?;
    writeln!(out, "wrote {} points to {}", points.len(), path.display())?;
    Ok(path)
}

fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let outcomes = run_checks(cfg);
    for o in &outcomes {
        writeln!(out, "{o}")?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    writeln!(out, "{} checks, {failed} failed", outcomes.len())?;
    if all_passed(&outcomes) {
        Ok(())
    } else {
        Err(CliError::Verification(failed))
    }
}

#[derive(Serialize)]
struct ScenarioInfo<'a> {
    scenario: &'a Scenario,
    clutter_one_lag_correlation: f64,
    cos2theta: f64,
    snr_linear: f64,
}

fn cmd_scenario_info(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let sc = &cfg.scenario;
    let cov = sc.covariance()?;
    let info = ScenarioInfo {
        scenario: sc,
        clutter_one_lag_correlation: clutter_one_lag(sc.sigma_f),
        cos2theta: cos_squared_theta(&sc.actual_steering()?, &sc.nominal_steering()?, &cov)?,
        snr_linear: sc.snr_db.linear(),
    };
    let json = serde_json::to_string_pretty(&info).map_err(|e| CliError::Io(e.to_string()))?;
    writeln!(out, "{json}")?;
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    match cli.command {
        Command::Calibrate => cmd_calibrate(&cfg, out).map(|_| ()),
        Command::PfaCurve => cmd_pfa_curve(&cfg, out).map(|_| ()),
        Command::PdCurve => cmd_pd_curve(&cfg, out).map(|_| ()),
        Command::Verify => cmd_verify(&cfg, out),
        Command::ScenarioInfo => cmd_scenario_info(&cfg, out),
    }
}

/// Parses `args`, runs the command, and maps the outcome to an exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
