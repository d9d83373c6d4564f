//! The canonical JSON circuit document.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::linalg::ComplexMatrix;

/// Source label reserved for the per-step classical input `x_t`.
pub const CLASSICAL_INPUT: &str = "$x";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theory {
    Quantum,
    Classical,
    Trivial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct System {
    pub label: String,
    pub dim: usize,
    pub theory: Theory,
}

/// One outcome of a test. Atomic iff it carries a single Kraus operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub outcome: String,
    pub kraus: Vec<ComplexMatrix>,
}

impl Event {
    pub fn atomic(outcome: impl Into<String>, op: ComplexMatrix) -> Self {
        Self {
            outcome: outcome.into(),
            kraus: vec![op],
        }
    }

    pub fn is_atomic(&self) -> bool {
        self.kraus.len() == 1
    }
}

/// Classical conditioning: the outcome of `source` selects which subset of
/// the target's events forms the test actually performed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub source: String,
    pub map: IndexMap<String, Vec<usize>>,
}

/// A node of the circuit: a test with typed input and output ports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Test {
    pub label: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub events: Vec<Event>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<Condition>,
}

impl Test {
    /// Event indices forming the test when the conditioning source produced
    /// `source_outcome`; all events when unconditioned.
    pub fn branch(&self, source_outcome: Option<&str>) -> Option<Vec<usize>> {
        match (&self.condition, source_outcome) {
            (None, _) => Some((0..self.events.len()).collect()),
            (Some(c), Some(o)) => c.map.get(o).cloned(),
            (Some(_), None) => None,
        }
    }

    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.events.iter().position(|e| e.outcome == label)
    }
}

/// Output port `from` feeds input port `to`; ports are `(node label, index)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wire {
    pub from: (String, usize),
    pub to: (String, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitDoc {
    pub name: String,
    pub systems: Vec<System>,
    pub nodes: Vec<Test>,
    pub wires: Vec<Wire>,
    pub closed: bool,
}
