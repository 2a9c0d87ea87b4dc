//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 2 on a bound or invariant
//! violation, 3 on invalid configuration, 1 on any other failure. Failures are
//! also written to stderr as one JSON object per line.

mod commands;
pub mod data;
pub mod experiments;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::order::Order;

pub const DEFAULT_SEED: u64 = 0x5EED_2024;
pub const WORKERS_ENV: &str = "COMPSIM_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "compsim",
    version,
    about = "Trotter, QDrift and composite Hamiltonian simulation costs and checks"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Hamiltonian file, or `bundled:<name>` for a built-in example.
    #[arg(long, global = true)]
    pub ham: Option<String>,
    #[arg(long = "time", global = true)]
    pub t: Option<f64>,
    #[arg(long = "eps", global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true, default_value_t = 2)]
    pub order: u32,
    /// QDrift samples per B block.
    #[arg(long, global = true, conflicts_with = "c")]
    pub nb: Option<f64>,
    /// Probabilistic-scheme parameter.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Cost bounds for Trotter, QDrift and composite channels.
    Cost(CostArgs),
    /// Gradient or probabilistic partition construction.
    Partition(PartitionArgs),
    /// Exact channel distances against the analytic bounds.
    Simulate(SimulateArgs),
    /// Run the invariant suite over the bundled Hamiltonians.
    Verify,
    /// Named numerical experiments.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Clone, Args)]
pub struct CostArgs {
    /// Trotter-partition indices, e.g. `0,2`. Omit to sweep every partition.
    #[arg(long)]
    pub partition: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Gradient,
    Prob,
}

#[derive(Debug, Clone, Args)]
pub struct PartitionArgs {
    #[arg(long, value_enum, default_value_t = Scheme::Prob)]
    pub scheme: Scheme,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Trotter-partition indices; defaults to every term but the last.
    #[arg(long)]
    pub partition: Option<String>,
    /// Also write one sampled composite gate sequence here.
    #[arg(long)]
    pub sequence_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Experiment {
    /// `h_i = 2^{-i}` family at the cost crossover time.
    ExpDecay {
        #[arg(long, value_delimiter = ',', default_values_t = [16usize, 32, 64, 128, 256])]
        l_grid: Vec<usize>,
    },
    /// Expected composite cost bound over the scheme parameter.
    Saturation {
        #[arg(long, value_delimiter = ',', default_values_t = experiments::DEFAULT_C_GRID.to_vec())]
        c_grid: Vec<f64>,
    },
    /// Crossover time for each accuracy.
    Crossover {
        #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4, 1e-5])]
        eps_grid: Vec<f64>,
    },
}

/// A violated check, as reported on stderr.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    pub instance: String,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub failures: Vec<Failure>,
}

impl RunConfig {
    pub fn order(&self) -> Result<Order> {
        Order::new(self.order)
    }

    pub fn time(&self) -> Result<f64> {
        positive("--time", self.t)
    }

    pub fn eps(&self) -> Result<f64> {
        positive("--eps", self.epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("--time", self.t),
            ("--eps", self.epsilon),
            ("--nb", self.nb),
        ] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "{name} must be positive, got {x}"
                    )));
                }
            }
        }
        if let Some(nb) = self.nb {
            if nb < 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "--nb must be at least 1, got {nb}"
                )));
            }
        }
        if let Some(c) = self.c {
            if !c.is_finite() {
                return Err(Error::InvalidArgument("--c must be finite".into()));
            }
        }
        if self.trials == Some(0) {
            return Err(Error::InvalidArgument("--trials must be positive".into()));
        }
        self.order()?;
        Ok(())
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<f64> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Ok(x),
        Some(x) => Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {x}"
        ))),
        None => Err(Error::InvalidArgument(format!("{name} is required"))),
    }
}

/// Runs a validated configuration and returns its output text.
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    config.validate()?;
    match &config.command {
        Command::Cost(args) => commands::cost(config, args),
        Command::Partition(args) => commands::partition(config, args),
        Command::Simulate(args) => commands::simulate(config, args),
        Command::Verify => verify::command(config),
        Command::Experiment(e) => experiments::command(config, e),
    }
}

pub fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Io { .. }
            | Error::Parse(_)
            | Error::NonHermitian { .. }
            | Error::ZeroTerm { .. }
            | Error::DimensionMismatch { .. }
            | Error::EmptyHamiltonian
            | Error::IndexOutOfRange { .. }
            | Error::InvalidPartition(_)
            | Error::InvalidOrder(_)
            | Error::EpsilonOutOfRange { .. }
            | Error::BelowLowerBound { .. }
            | Error::InvalidArgument(_)
    )
}

/// Executes, writes the output and returns the exit code.
pub fn run(config: &RunConfig) -> i32 {
    let outcome = match execute(config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return if is_config_error(&e) {
                EXIT_CONFIG
            } else {
                EXIT_FAILURE
            };
        }
    };
    let written = match &config.out {
        Some(path) => std::fs::write(path, &outcome.output)
            .map_err(|e| Error::io(path.display().to_string(), e)),
        None => {
            print!("{}", outcome.output);
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return EXIT_FAILURE;
    }
    for f in &outcome.failures {
        eprintln!(
            "{}",
            serde_json::to_string(f).expect("failure rows serialize")
        );
    }
    if outcome.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

/// Parses arguments (including the program name) and runs them.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(config) => run(&config),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}

/// Reads the worker count from the environment.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::InvalidArgument(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}

pub(crate) fn parse_indices(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::InvalidArgument(format!("bad index {s:?}")))
        })
        .collect()
}
