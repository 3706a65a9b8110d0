//! Command-line driver: `swlab <command> [--config PATH] [--seed N]
//! [--workers N] [--out DIR] [key=value ...]`.
//!
//! Exit codes: 0 success, 1 a check failed or the solver did not converge,
//! 2 the run could not be carried out (bad config, precondition, I/O).

pub mod commands;
pub mod config;
pub mod json;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use thiserror::Error;

use commands::Verdict;
use config::{ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] swlab::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CheckParams,
    Apply,
    Solve,
    Verify,
    Hardy,
}

#[derive(Debug, Parser)]
#[command(name = "swlab", version, about = "Extremal pairs of the boundary-to-interior potential")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Flat key=value file, e.g. `params.n=3`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for randomized checks; overrides `io.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory receiving reports and profiles.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// `key=value` overrides, applied after the file.
    pub overrides: Vec<String>,
}

impl Cli {
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("io.seed={seed}"));
        }
        RunConfig::resolve(self.config.as_deref(), &overrides)
    }
}

pub fn execute(cli: &Cli) -> Result<Verdict, CliError> {
    let cfg = cli.resolve()?;
    std::fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    let run = || match cli.command {
        Command::CheckParams => commands::check_params(&cfg, out),
        Command::Apply => commands::apply(&cfg, out),
        Command::Solve => commands::solve(&cfg, out),
        Command::Verify => commands::verify(&cfg, out),
        Command::Hardy => commands::hardy(&cfg, out),
    };
    match cli.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| std::io::Error::other(e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(Verdict::Pass) => 0,
        Ok(Verdict::Fail) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
