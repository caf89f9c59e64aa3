//! Command-line front end: configuration, record files and the
//! `simulate`, `fit`, `tomo` and `heating` subcommands.

pub mod commands;
pub mod config;
pub mod error;
pub mod records;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Context;
pub use config::{Overrides, RunConfig};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "ionkick", version, about = "Spin-dependent-kick interferometry: simulate, fit, reconstruct")]
pub struct Cli {
    /// TOML run configuration; defaults apply to anything omitted.
    #[arg(long, global = true, env = "IONKICK_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shots per measured point.
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic fringe, lineshape or ring records.
    Simulate,
    /// Fit revival lineshapes in fringe CSVs for n̄.
    Fit {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Reconstruct χ on a grid from a ring CSV, or from simulated rings.
    Tomo { input: Option<PathBuf> },
    /// Predict n̄ from a voltage-noise drive and check it end to end.
    Heating,
}

pub fn load_context(cli: &Cli) -> CliResult<Context> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    config.apply(&Overrides {
        out: cli.out.clone(),
        seed: cli.seed,
        shots: cli.shots,
    });
    Context::new(config)
}

/// Runs one invocation and returns the files written.
pub fn run(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let ctx = load_context(cli)?;
    match &cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::Fit { inputs } => Ok(commands::fit(&ctx, inputs)?.1),
        Command::Tomo { input } => Ok(commands::tomo(&ctx, input.as_deref())?.files),
        Command::Heating => Ok(commands::heating(&ctx)?.1),
    }
}
