//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 size guard hit, 4 a reported
//! check failed. Every summary carries the resolved spec (command, seed,
//! replicas, guard and full config); passing a summary back through
//! `--config` reruns the same experiment.

mod commands;
mod experiments;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::partitions::Guard;

pub use experiments::{
    CharlierSimConfig, FixedKernelRunConfig, OuRunConfig, RggRunConfig, SimulateConfig, Term,
    DEFAULT_Z_GRID, SE_LIMIT,
};
pub use output::{write_atomic, Format, Report, Table};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_REPLICAS: usize = 10_000;
pub const DEFAULT_GUARD: usize = 20;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Input(String),
    #[error("output: {0}")]
    Output(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_guard() => 3,
            CliError::CheckFailed(_) => 4,
            CliError::Output(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pchaos", version, about = "Diagram formulas and Monte Carlo checks for Poisson functionals")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving summary.json and a CSV table.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Largest diagram size (number of elements) to enumerate.
    #[arg(long = "guard-n", global = true)]
    pub guard_n: Option<usize>,
    /// Monte Carlo replicas.
    #[arg(long, global = true)]
    pub replicas: Option<usize>,
    /// What to print when --out is not given.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count, list and bound diagram partitions.
    Partitions {
        #[command(subcommand)]
        action: PartitionsCmd,
    },
    /// Exact cumulants and bound parameters of a chaos element.
    Cumulants(CumulantsArgs),
    /// Monte Carlo check of a U-statistic or Wiener–Itô integral.
    Simulate(ConfigArg),
    /// Subgraph counts in a random geometric graph.
    Rgg(ConfigArg),
    /// Quadratic functional of a Lévy-driven Ornstein–Uhlenbeck process.
    Ou(ConfigArg),
    /// Charlier polynomials and their partial sums.
    Charlier {
        #[command(subcommand)]
        action: CharlierCmd,
    },
    /// U-statistic with a kernel independent of the intensity.
    FixedKernel(ConfigArg),
}

#[derive(Debug, Subcommand)]
pub enum PartitionsCmd {
    Count {
        #[arg(long)]
        shape: String,
        #[arg(long, default_value = "all")]
        class: String,
    },
    Enumerate {
        #[arg(long)]
        shape: String,
        #[arg(long, default_value = "all")]
        class: String,
        /// Include an ASCII drawing of each partition.
        #[arg(long)]
        ascii: bool,
    },
    VerifyBound {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        m: usize,
    },
    LowerFamily {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        u: usize,
        #[arg(long)]
        k: usize,
    },
}

#[derive(Debug, Args)]
pub struct CumulantsArgs {
    /// Kernel file (JSON).
    #[arg(long)]
    pub kernels: PathBuf,
    /// wiener-ito or u-statistic.
    #[arg(long, default_value = "u-statistic")]
    pub kind: String,
    #[arg(long = "m-max", default_value_t = crate::chaos::DEFAULT_M_MAX)]
    pub m_max: usize,
    /// Intensity multiplier applied to the atom weights.
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Kernels to sum (default: all kernels in the file).
    #[arg(long = "kernel")]
    pub names: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Experiment config, or a summary.json from an earlier run.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CharlierCmd {
    /// Coefficients of H_q.
    Poly {
        #[arg(long)]
        q: usize,
    },
    /// Compares E[H_q(Z)^m] with the diagram formula.
    Check {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        m: usize,
        /// Truncation tolerance of the Poisson series.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Largest accepted residual.
        #[arg(long, default_value_t = 1e-8)]
        threshold: f64,
    },
    /// Whether sums of H_q(Z_k) satisfy an MDP at scale c n^theta (log n)^rho.
    Classify {
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        rho: String,
    },
    /// Monte Carlo tails of S_n = sum of H_q(Z_k), k = 1..n.
    Simulate {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        n: u64,
    },
}

/// Resolved run parameters recorded in every summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec<T> {
    pub command: String,
    pub seed: u64,
    pub replicas: usize,
    pub guard_n: usize,
    pub config: T,
}

/// Global options after defaults are applied.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Globals {
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub guard_n: Option<usize>,
}

impl Globals {
    pub fn spec<T>(&self, command: &str, config: T) -> ExperimentSpec<T> {
        ExperimentSpec {
            command: command.to_string(),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            replicas: self.replicas.unwrap_or(DEFAULT_REPLICAS),
            guard_n: self.guard_n.unwrap_or(DEFAULT_GUARD),
            config,
        }
    }

    pub fn guard(&self) -> Guard {
        Guard::new(self.guard_n.unwrap_or(DEFAULT_GUARD))
    }
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let g = Globals { seed: cli.seed, replicas: cli.replicas, guard_n: cli.guard_n };
    match &cli.command {
        Command::Partitions { action } => commands::partitions(action, &g),
        Command::Cumulants(args) => commands::cumulants(args, &g),
        Command::Charlier { action } => match action {
            CharlierCmd::Simulate { q, n } => experiments::charlier_simulate(*q, *n, &g),
            other => commands::charlier(other, &g),
        },
        Command::Simulate(c) => experiments::simulate(&c.config, &g),
        Command::Rgg(c) => experiments::rgg(&c.config, &g),
        Command::Ou(c) => experiments::ou(&c.config, &g),
        Command::FixedKernel(c) => experiments::fixed_kernel(&c.config, &g),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = execute(&cli).and_then(|report| {
        output::emit(&report, cli.out.as_deref(), cli.format)?;
        match report.failure {
            Some(what) => Err(CliError::CheckFailed(what)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> ExitCode {
    ExitCode::from(run_from(std::env::args_os()))
}
