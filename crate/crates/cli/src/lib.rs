//! Command-line front end: every subcommand reads one JSON [`RunConfig`],
//! writes its outputs under the output directory and embeds the resolved
//! configuration in each file.

pub mod commands;
pub mod config;
pub mod montecarlo;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "sparsearray", version, about = "MaxSINR sparse array design")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Master seed; overrides `design.seed` and `montecarlo.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the SDR-based design (NFSDR, perturbed NFSDR or FSDR).
    Design,
    /// Rank every P-sensor support by its optimal SINR.
    Enumerate,
    /// Evaluate the array response over a grid of angles.
    Beampattern,
    /// Report the difference co-array and full augmentability of a support.
    Coarray,
    /// Compare all methods over random interference environments.
    Montecarlo,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] sparsearray::Error),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        use sparsearray::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Library(E::Numeric(_) | E::Infeasible(_)) => 3,
            CliError::Library(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

/// Loads the configuration, applies overrides and runs the subcommand on a
/// pool of the requested size. Returns the text summary for stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let mut config = RunConfig::load(path)?;
    config.apply_overrides(cli.out.clone(), cli.seed);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Design => commands::design(&config),
        Command::Enumerate => commands::enumerate(&config),
        Command::Beampattern => commands::beampattern(&config),
        Command::Coarray => commands::coarray(&config),
        Command::Montecarlo => montecarlo::run(&config),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sparsearray::Error as E;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(E::Numeric("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(E::Infeasible("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(E::BudgetExceeded { count: 2, budget: 1 }).exit_code(), 2);
        assert_eq!(CliError::from(E::NoDesiredSource).exit_code(), 2);
    }
}
