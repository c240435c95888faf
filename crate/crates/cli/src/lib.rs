//! Command-line front end for the `itisc` clustering toolkit: dataset
//! generation, model fitting and prediction, and the boundary, temperature
//! sweep, weight trace and distribution-shift experiments.
//!
//! Every command is a pure function of its arguments and seeds, so repeated
//! invocations produce byte-identical output unless `--timestamp` is given.

pub mod commands;
pub mod data;
pub mod error;
pub mod model;
pub mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};
pub use model::{Fit, ModelSpec, Rule};
pub use report::{Format, Report, Row};

pub const VERSION: &str = concat!("itisc ", env!("CARGO_PKG_VERSION"));

/// Seeds used when neither `--seed` nor `--seeds` is given.
pub const DEFAULT_SEEDS: [u64; 4] = [0, 1, 2, 3];

#[derive(Debug, Parser)]
#[command(
    name = "itisc",
    version,
    about = "Importance-sampling minimax clustering experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Single random seed (shorthand for a one-element --seeds).
    #[arg(long, global = true, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Comma-separated seeds; results are averaged over them. Defaults to 0,1,2,3.
    #[arg(long, global = true, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Output file (standard output when omitted).
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Worker threads for independent seeds and grid cells.
    #[arg(long, global = true, default_value_t = 1)]
    pub parallel: usize,
    /// Record the wall-clock time in report metadata.
    #[arg(long, global = true)]
    pub timestamp: bool,
}

impl GlobalArgs {
    pub fn seeds(&self) -> CliResult<Vec<u64>> {
        let seeds = match (&self.seed, &self.seeds) {
            (Some(s), _) => vec![*s],
            (None, Some(list)) => list.clone(),
            (None, None) => DEFAULT_SEEDS.to_vec(),
        };
        if seeds.is_empty() {
            return Err(error::config("--seeds must not be empty"));
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seeds.len() {
            return Err(error::config("--seeds must be distinct"));
        }
        Ok(seeds)
    }

    pub fn timestamp(&self) -> Option<u64> {
        self.timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
    }

    /// Opens `--out`, or standard output.
    pub fn writer(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
                error::config(format!("cannot create `{}`: {e}", path.display()))
            })?)),
            None => Box::new(std::io::stdout().lock()),
        })
    }

    pub fn pool(&self) -> CliResult<rayon::ThreadPool> {
        if self.parallel == 0 {
            return Err(error::config("--parallel must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallel)
            .build()
            .map_err(|e| error::config(format!("thread pool: {e}")))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a built-in or JSON-specified Gaussian mixture to CSV.
    Gen(commands::gen::GenArgs),
    /// Fit a model for each seed and write a JSON model document.
    Fit(commands::fit::FitArgs),
    /// Assign the rows of a dataset to the clusters of a fitted model.
    Predict(commands::predict::PredictArgs),
    /// M-BoundaryDist of several models on several datasets.
    Boundary(commands::boundary::BoundaryArgs),
    /// Boundary distances and peak weight of Fuzzy-ITISC across T2 values.
    #[command(name = "t2-sweep")]
    T2Sweep(commands::sweep::SweepArgs),
    /// Importance weights after every alternating-optimization sweep.
    #[command(name = "weights-trace")]
    WeightsTrace(commands::trace::TraceArgs),
    /// Within-cluster distance of fitted models on mean-shifted or
    /// covariance-scaled resamples of a mixture.
    #[command(name = "shift-exp")]
    ShiftExp(commands::shift::ShiftArgs),
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Gen(a) => commands::gen::run(g, a),
        Command::Fit(a) => commands::fit::run(g, a),
        Command::Predict(a) => commands::predict::run(g, a),
        Command::Boundary(a) => commands::boundary::run(g, a),
        Command::T2Sweep(a) => commands::sweep::run(g, a),
        Command::WeightsTrace(a) => commands::trace::run(g, a),
        Command::ShiftExp(a) => commands::shift::run(g, a),
    }
}
