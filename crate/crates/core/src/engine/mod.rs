//! Foliation, history operators and outcome sampling.
//!
//! A circuit is evaluated either node by node on a *register* of live wires
//! (used for sampling and enumeration), or slice by slice along a
//! [`Foliation`], where every slice is a tensor product of Kraus operators
//! padded with identities. Both routes produce the same operator from the
//! input leaf (open inputs) to the output leaf (open outputs).

mod enumerate;
mod foliation;
mod layout;
mod program;
mod sample;

use thiserror::Error;

use crate::circuit::CircuitError;
use crate::linalg::{LinalgError, DEFAULT_MAX_DIM};

pub use enumerate::{
    count_histories, enumerate_histories, history_operator, history_probability, step_operator, History,
    HistoryEntry,
};
pub use foliation::{
    compile_history, compile_slice, foliate, Foliation, FoliationStrategy, HistoryOperator,
};
pub use layout::{Slot, SlotKind, WireTable};
pub use program::{parse_program, parse_program_with, CircuitSource, Program, ProgramDoc, ProgramStep, StepDoc};
pub use sample::{run_many, run_trajectory, sample_step, StepSample, Trajectory, TrajectoryStep};

/// Branch weights below this are excluded from sampling.
pub const ZERO_WEIGHT: f64 = 1e-14;

/// Default cap on the number of enumerated histories.
pub const DEFAULT_HISTORY_CAP: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("event `{event}` of node `{node}` is not atomic ({count} Kraus operators)")]
    NotAtomic { node: String, event: String, count: usize },
    #[error("no outcome assigned to node `{0}`")]
    MissingOutcome(String),
    #[error("node `{node}` has no event {event}")]
    BadOutcome { node: String, event: usize },
    #[error("invalid foliation: {0}")]
    InvalidFoliation(String),
    #[error("history count exceeds the cap of {cap}")]
    HistoryCap { cap: usize },
    #[error("dimension {dim} exceeds the cap of {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("step {step} conditions on the classical input but none was given")]
    MissingInput { step: usize },
    #[error("node `{node}` has no branch for classical input `{input}`")]
    UnknownInput { node: String, input: String },
    #[error("initial state has norm² {0}, expected 1")]
    NotNormalized(f64),
    #[error("state has dimension {got}, expected {expected}")]
    StateDimension { expected: usize, got: usize },
    #[error("cannot link step {step}: {detail}")]
    Link { step: usize, detail: String },
    #[error("deterministic test `{node}` has total weight {total}")]
    TestInconsistency { node: String, total: f64 },
    #[error("program has no steps")]
    EmptyProgram,
    #[error("unknown circuit `{0}`")]
    UnknownCircuit(String),
    #[error("malformed program: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;

/// Engine limits and what a trajectory records.
#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub max_dim: usize,
    pub history_cap: usize,
    /// Keep the normalized post-state of every step.
    pub store_states: bool,
    /// Keep the Kraus operator applied at every step.
    pub store_operators: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_MAX_DIM,
            history_cap: DEFAULT_HISTORY_CAP,
            store_states: false,
            store_operators: false,
        }
    }
}
