//! Experiment runner and analysis front-end for the peer sampling
//! laboratory. Exit codes: 0 success, 2 usage error, 3 data error.

mod commands;
mod config;
mod fmt;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// CLI-level usage problems (bad grids, malformed value lists).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(
    name = "basalt",
    version,
    about = "Byzantine-tolerant peer sampling: simulations, parameter sweeps and model analysis"
)]
struct Cli {
    /// TOML config file with defaults (flags override it).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker pool size (default: env BASALT_WORKERS, then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run simulations over a parameter grid, one CSV per run.
    Simulate(commands::simulate::SimulateArgs),
    /// Reproduce evaluation panels: sample-quality sweeps, convergence
    /// times and maximum sampling rates.
    Sweep(commands::sweep::SweepArgs),
    /// Closed-form and dataset analyses.
    Analyze(commands::analyze::AnalyzeArgs),
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let file = config::FileConfig::load(cli.config.as_deref())?;

    let workers: usize = cli
        .workers
        .or(file.workers)
        .or_else(|| {
            std::env::var("BASALT_WORKERS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(0);
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .ok();
    }

    match cli.command {
        Command::Simulate(args) => commands::simulate::run(args, &file),
        Command::Sweep(args) => commands::sweep::run(args, &file),
        Command::Analyze(args) => commands::analyze::run(args),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if err.is::<UsageError>() {
                2
            } else if let Some(e) = err.downcast_ref::<basalt_sim::Error>() {
                match e {
                    basalt_sim::Error::Dataset { .. } | basalt_sim::Error::DatasetIo(_) => 3,
                    _ => 2,
                }
            } else if err.is::<std::io::Error>() {
                3
            } else {
                2
            };
            ExitCode::from(code)
        }
    }
}
