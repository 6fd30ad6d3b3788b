//! Command-line front end: argument parsing, run configuration and report
//! output. The binary only forwards to [`run`] and [`exit_code`].

mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::error::{Error, Result};

pub use config::{IncentiveSpec, MarketSpec, NumericSpec, RunConfig, UtilitySpec};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "incentive-duality",
    version,
    about = "Concavification, duality and Monte Carlo reports for incentive-driven utility maximization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// JSON or TOML run configuration (unknown keys are rejected).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for CSV tables and the JSON summary.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// paper-example, counterexample, concave; for models-diag also mixture,
    /// hull-white, scott, heston, zero-rate.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub k: Option<f64>,
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long = "T", global = true)]
    pub horizon: Option<f64>,
    #[arg(long, global = true)]
    pub x: Option<f64>,
    /// Also write per-path dumps.
    #[arg(long, global = true)]
    pub dump: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Envelope and conjugate tables for the composed utility.
    Concavify,
    /// Closed-form Black-Scholes solution, value curves and RRA data.
    SolveBs {
        /// Use the zero-drift construction when the market price of risk is 0.
        #[arg(long)]
        driftless: bool,
        /// Search for the optimal incentive scaling.
        #[arg(long)]
        alpha_scan: bool,
    },
    /// Replays the explicit hedge on simulated paths.
    HedgeSim {
        /// Stop trading once wealth reaches zero.
        #[arg(long)]
        absorbing: bool,
        /// Uniform instead of graded time grid.
        #[arg(long)]
        uniform: bool,
    },
    /// Simulates the zero-drift stopped strategy.
    DriftlessSim {
        /// Log-clock horizon; a default that leaves about 1e-7 mass in flight.
        #[arg(long)]
        s_max: Option<f64>,
    },
    /// Scaling identities and the optimal-scaling search.
    Scaling,
    /// One-period finite market report.
    Discrete,
    /// Density samples, atom diagnostics and dual values for incomplete models.
    ModelsDiag {
        /// Dual variables at which `E[U*(y Z)]` is estimated.
        #[arg(long, value_delimiter = ',')]
        y: Option<Vec<f64>>,
    },
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::Concavify => "concavify",
            Command::SolveBs { .. } => "solve-bs",
            Command::HedgeSim { .. } => "hedge-sim",
            Command::DriftlessSim { .. } => "driftless-sim",
            Command::Scaling => "scaling",
            Command::Discrete => "discrete",
            Command::ModelsDiag { .. } => "models-diag",
        }
    }
}

/// JSON summary plus named CSV tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub summary: Value,
    pub tables: Vec<(String, Vec<u8>)>,
}

/// Exit status for an error: 2 configuration, 3 numeric, 4 degenerate
/// market, 5 model guard.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Convergence { .. } | Error::EmptySample => 3,
        Error::DegenerateMarket => 4,
        Error::FellerViolation { .. } | Error::GramianSingular { .. } => 5,
        _ => 2,
    }
}

/// Executes the command on a rayon pool of the requested size and writes
/// outputs when `--out` is set.
pub fn run(cli: &Cli) -> Result<Output> {
    let cfg = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let job = || commands::dispatch(&cli.command, &cli.global, &cfg);
    let output = match cli.global.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?
            .install(job)?,
        None => job()?,
    };
    if let Some(dir) = &cli.global.out {
        write_outputs(dir, cli.command.verb(), &output)?;
    }
    Ok(output)
}

fn write_outputs(dir: &Path, verb: &str, output: &Output) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in &output.tables {
        fs::write(dir.join(name), bytes)?;
    }
    let text = serde_json::to_string_pretty(&output.summary).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join(format!("{verb}.json")), text + "\n")?;
    Ok(())
}
