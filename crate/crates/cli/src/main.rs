//! Batch front end for the collapse-dynamics toolkit.
//!
//! A JSON configuration file is the primary interface; command-line flags
//! override individual fields. Exit codes: 0 on success, 1 on numerical
//! failure, 2 on configuration errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CliError;
use config::{FileConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "csl",
    about = "Collapse-dynamics simulations: stochastic trajectories, the \
             master-equation oracle, collapse statistics, exclusion bounds \
             and matrix-model flows",
    version
)]
struct Cli {
    /// JSON configuration file; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Base seed (overrides run.base_seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Trajectory count (overrides run.n_traj).
    #[arg(long, global = true)]
    n_traj: Option<usize>,

    /// Step count (overrides run.n_steps).
    #[arg(long, global = true)]
    n_steps: Option<usize>,

    /// Time step (overrides run.dt).
    #[arg(long, global = true)]
    dt: Option<f64>,

    /// Collapse rate lambda (overrides params; clears gamma).
    #[arg(long, global = true)]
    lambda: Option<f64>,

    /// Collapse coupling gamma (overrides params; clears lambda).
    #[arg(long, global = true)]
    gamma: Option<f64>,

    /// Worker thread count (also via CSL_WORKERS; default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// One stochastic collapse run -> observables CSV + final state CSV.
    Trajectory,
    /// N independent runs -> ensemble statistics CSV + averaged density matrix.
    Ensemble,
    /// Collapse-outcome frequency experiment -> JSON tally.
    Born,
    /// Ensemble energy-growth fit against the closed-form rate -> CSV + JSON.
    Heating,
    /// Deterministic master-equation evolution -> CSV + density matrix.
    Master,
    /// Parameter-space exclusion scan over bound records -> CSV.
    Exclusion,
    /// Matrix-model flow conservation report -> JSON.
    TdConserve,
    /// Trace line element boost-invariance report -> JSON.
    TdBoost,
}

fn init_workers(flag: Option<usize>) -> Result<(), CliError> {
    let from_env = std::env::var("CSL_WORKERS")
        .ok()
        .map(|v| {
            v.parse::<usize>().map_err(|_| {
                CliError::Config(config::ConfigError::new(
                    "CSL_WORKERS",
                    format!("not a thread count: {v:?}"),
                ))
            })
        })
        .transpose()?;
    if let Some(n) = flag.or(from_env) {
        if n == 0 {
            return Err(CliError::Config(config::ConfigError::new(
                "workers",
                "thread count must be positive",
            )));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Numerical(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    init_workers(cli.workers)?;
    let file = match &cli.config {
        Some(path) => config::load_file(path)?,
        None => FileConfig::default(),
    };
    let overrides = Overrides {
        out_dir: cli.out_dir.clone(),
        base_seed: cli.seed,
        n_traj: cli.n_traj,
        n_steps: cli.n_steps,
        dt: cli.dt,
        lambda: cli.lambda,
        gamma: cli.gamma,
    };
    let cfg = config::apply_overrides(file, &overrides)?;

    let mut written: Vec<PathBuf> = Vec::new();
    let result = match cli.command {
        Command::Trajectory => commands::trajectory(&cfg, &mut written),
        Command::Ensemble => commands::ensemble(&cfg, &mut written),
        Command::Born => commands::born(&cfg, &mut written),
        Command::Heating => commands::heating(&cfg, &mut written),
        Command::Master => commands::master(&cfg, &mut written),
        Command::Exclusion => commands::exclusion(&cfg, &mut written),
        Command::TdConserve => commands::td_conserve(&cfg, &mut written),
        Command::TdBoost => commands::td_boost(&cfg, &mut written),
    };
    if result.is_err() {
        for path in &written {
            let _ = std::fs::remove_file(path);
        }
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Numerical(_) => ExitCode::from(1),
            }
        }
    }
}
