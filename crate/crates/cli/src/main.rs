//! `ontic`: batch front end for circuit validation, trajectory sampling,
//! history enumeration, tomography, the memory benchmark and individuation
//! timelines.
//!
//! Data goes to stdout (or `--out`); diagnostics go to stderr. Exit status
//! is 0 on success, 1 when the input is well-formed but fails a domain
//! check, and 2 for I/O and usage errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(name = "ontic", version, about = "Pure-state circuit simulator over operational probabilistic theories")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// RNG seed; every command is deterministic given its inputs and seed.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output format (each command has its own default).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Tolerance for `Σ K†K ≤ I` when validating circuits.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Largest state or operator dimension the engine may build.
    #[arg(long, global = true, default_value_t = ontic_core::linalg::DEFAULT_MAX_DIM)]
    pub max_dim: usize,
    /// Write data here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Jsonl,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse and validate a circuit or program file.
    Validate { path: PathBuf },
    /// Sample trajectories as JSON Lines.
    Run {
        path: PathBuf,
        #[arg(long, default_value_t = 1)]
        trajectories: usize,
        /// Include every post-state and the final state in the records.
        #[arg(long)]
        store_states: bool,
        /// Classical input for every step that conditions on it.
        #[arg(long)]
        input: Option<String>,
    },
    /// Exhaustively list outcome histories with their probabilities.
    Enumerate {
        path: PathBuf,
        #[arg(long)]
        input: Option<String>,
        /// Maximum number of histories.
        #[arg(long, default_value_t = ontic_core::engine::DEFAULT_HISTORY_CAP)]
        cap: usize,
    },
    /// Monte Carlo store-and-recall fidelities against (M+1)/(M+d).
    BenchMemory {
        /// Comma-separated copy numbers M.
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3])]
        copies: Vec<usize>,
        /// Comma-separated dimensions d.
        #[arg(long, value_delimiter = ',', default_values_t = [2usize])]
        dims: Vec<usize>,
        /// Comma-separated strategies (default: all).
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<String>,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Per-step finest factorization of one sampled trajectory.
    Classify {
        path: PathBuf,
        #[arg(long)]
        input: Option<String>,
        /// Trajectory (RNG stream) index.
        #[arg(long, default_value_t = 0)]
        trajectory: u64,
    },
    /// Simulated SIC or Pauli tomography of a pure state.
    Tomography {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, value_enum, default_value_t = PovmKind::Sic)]
        povm: PovmKind,
        /// State as JSON `[[re, im], …]`; Haar-random from the seed if absent.
        #[arg(long)]
        state: Option<String>,
    },
    /// Slices and leaves of a circuit foliation.
    Foliate {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = StrategyKind::Asap)]
        strategy: StrategyKind,
        /// Groups of node labels for `--strategy given`, as JSON.
        #[arg(long)]
        groups: Option<String>,
    },
    /// Rewrite a DSL circuit as a canonical JSON document.
    Convert { path: PathBuf },
    /// Number of entanglement patterns p(n)·n! of n systems.
    Patterns { n: usize },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PovmKind {
    Sic,
    Pauli,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyKind {
    Asap,
    Alap,
    Random,
    Given,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
