//! Command-line driver for the jumppolymer experiments.
//!
//! Exit status: 0 on success, 1 if any pathwise check was violated, 2 on a
//! configuration error, 3 on any other failure.

mod config;
mod genenv;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use jumppolymer::experiments::{self, Progress, ProgressEvent, Report};
use log::{info, warn};

use config::ConfigError;
use manifest::Manifest;

#[derive(Parser, Debug)]
#[command(name = "jumppolymer", version, about = "Directed polymers with stretched-exponential jumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Config file (JSON, or TOML when the extension is .toml).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set truncation.clip=64` or `--set p=0.9,0.99`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory for CSVs and the manifest.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    /// Base seed; overrides `seed` from the config.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Increase log verbosity (-v progress, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Free-energy curves over the beta and p grids.
    FreeEnergy(Common),
    /// Zero-temperature floor and superposition monotonicity.
    ZeroTemp(Common),
    /// Rescaled free energy against passage times as p approaches 1.
    HighDensity(Common),
    /// Time-constant estimates and the comparison inequalities.
    MuContinuity(Common),
    /// Lower-tail frequencies of passage times.
    Concentration(Common),
    /// Oriented-percolation block lower bound.
    BlockBound(Common),
    /// Mass of paths with a small nearest-open-site budget.
    TiltedMass(Common),
    /// Per-replica passage times with greedy and regularized bounds.
    PassageTime(Common),
    /// Brute-force oracle suite on small random instances.
    Verify(Common),
    /// Dump environment descriptors and Poisson points.
    GenEnv {
        #[command(flatten)]
        common: Common,
        /// Half-width of the spatial box whose points are written.
        #[arg(long, default_value_t = 8.0)]
        half_width: f64,
    },
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::FreeEnergy(c) => ("free-energy", c),
            Command::ZeroTemp(c) => ("zero-temp", c),
            Command::HighDensity(c) => ("high-density", c),
            Command::MuContinuity(c) => ("mu-continuity", c),
            Command::Concentration(c) => ("concentration", c),
            Command::BlockBound(c) => ("block-bound", c),
            Command::TiltedMass(c) => ("tilted-mass", c),
            Command::PassageTime(c) => ("passage-time", c),
            Command::Verify(c) => ("verify", c),
            Command::GenEnv { common, .. } => ("gen-env", common),
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] jumppolymer::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Run(jumppolymer::Error::Config(_)) => 2,
            _ => 3,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Logs replica progress as events arrive from the workers.
fn progress_logger(rx: mpsc::Receiver<ProgressEvent>) -> std::thread::JoinHandle<()> {
    std::thread::spawn(move || {
        let mut done = 0usize;
        for ev in rx {
            done += 1;
            info!("{}: replica {} finished ({done}/{})", ev.experiment, ev.replica, ev.total);
        }
    })
}

fn run_experiment(name: &'static str, cfg: &experiments::SweepConfig) -> Result<Report, CliError> {
    let (tx, rx) = mpsc::channel();
    let logger = progress_logger(rx);
    let report = experiments::run(name, cfg, &Progress::channel(tx));
    // the sender was dropped with the Progress value, so the logger drains and exits
    logger.join().expect("progress logger");
    Ok(report?)
}

fn execute(command: &Command) -> Result<u64, CliError> {
    let (name, common) = command.parts();
    let loaded = config::load(common.config.as_deref(), &common.overrides, common.seed)?;
    let cfg = loaded.config;
    cfg.validate()?;
    let dir: &Path = &common.out;
    std::fs::create_dir_all(dir).map_err(io_err(format!("creating {}", dir.display())))?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = common.threads {
        pool = pool.num_threads(t as usize);
    }
    let pool = pool.build().map_err(|e| CliError::Io { context: "thread pool".into(), source: std::io::Error::other(e) })?;

    let start = Instant::now();
    let (outputs, violations, warnings) = match command {
        Command::GenEnv { half_width, .. } => (genenv::generate(&cfg, *half_width, dir)?, 0, Vec::new()),
        _ => {
            let report = pool.install(|| run_experiment(name, &cfg))?;
            let outputs = report.write_csvs(dir)?;
            for c in report.checks.iter().filter(|c| c.violations > 0) {
                eprintln!("violation: {} failed {} of {} comparisons (worst {:e})", c.name, c.violations, c.comparisons, c.worst);
            }
            (outputs, report.violations(), report.warnings)
        }
    };
    for w in &warnings {
        warn!("{w}");
    }
    let elapsed = start.elapsed().as_secs_f64();
    let manifest = Manifest::new(name, &cfg, &loaded.input, &outputs, violations, warnings, elapsed)
        .map_err(io_err("hashing outputs"))?;
    let path = manifest.write(dir).map_err(io_err("writing manifest"))?;
    info!("{name}: {} files, manifest {} ({elapsed:.2} s)", outputs.len(), path.display());
    Ok(violations)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.command.parts().1.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli.command) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
