//! Configuration-driven experiment runner.
//!
//! `engine <experiment> --config <file> [--seed N] [--out DIR]` reads a TOML
//! configuration (see [`config`]), validates everything the experiment needs,
//! runs it on a worker pool and writes CSV tables into the output directory.
//! The seed and output directory can also be set with `ENGINE_SEED` and
//! `ENGINE_OUT_DIR`; command-line flags take precedence over the environment,
//! which takes precedence over the file.
//!
//! Exit status is 0 on success, 2 for configuration or input errors and 1 for
//! numerical or I/O failures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use thiserror::Error;

pub use config::ExperimentConfig;
use experiments::Plan;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{module}: {source}")]
    Numerical {
        module: &'static str,
        #[source]
        source: tsou::Error,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// First four cumulants of X(t) against their closed forms.
    Cumulants,
    /// FFT call strip with a Monte Carlo check and an optional strike sweep.
    CallStrip,
    /// Monte Carlo Asian calls under exact and approximate schemes.
    Asian,
    /// Least-squares Monte Carlo swing option.
    Swing,
    /// Futures paths of the two-factor delivery-period model.
    NoaSim,
    /// Sample paths of X on a daily grid.
    Trajectories,
    /// Plot-ready reshaping of a strike sweep or a path dump.
    PlotData,
}

/// Overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunOptions {
    /// Command-line values, falling back to `ENGINE_SEED` and `ENGINE_OUT_DIR`.
    pub fn resolve(seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, CliError> {
        let seed = match seed {
            Some(s) => Some(s),
            None => match std::env::var("ENGINE_SEED") {
                Ok(v) => Some(
                    v.trim()
                        .parse::<u64>()
                        .map_err(|_| CliError::Config(format!("ENGINE_SEED: `{v}` is not an unsigned integer")))?,
                ),
                Err(_) => None,
            },
        };
        if let Some(s) = seed {
            check_seed(s)?;
        }
        let out = out.or_else(|| std::env::var_os("ENGINE_OUT_DIR").map(PathBuf::from));
        Ok(RunOptions { seed, out })
    }
}

/// Seeds are echoed into TOML headers, whose integers are signed 64-bit.
fn check_seed(seed: u64) -> Result<(), CliError> {
    if seed > i64::MAX as u64 {
        return Err(CliError::Config(format!("seed {seed} exceeds the largest allowed value {}", i64::MAX)));
    }
    Ok(())
}

/// Loads, validates and runs one experiment, returning the files written.
pub fn run(kind: Experiment, config_path: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let out_dir = opts.out.clone().unwrap_or_else(|| cfg.output_dir());
    run_config(kind, &cfg, &out_dir)
}

/// Runs an already parsed configuration.
pub fn run_config(kind: Experiment, cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    check_seed(cfg.seed)?;
    let plan = Plan::build(kind, cfg)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        if n == 0 {
            return Err(CliError::Config("`threads` must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Io(format!("worker pool: {e}")))?;
    let tables = pool.install(|| plan.run())?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let echo = cfg.to_toml();
    tables.iter().map(|(name, table)| table.write(out_dir, name, &echo)).collect()
}
