//! Circuits of tests wired into directed acyclic graphs.
//!
//! The JSON document ([`CircuitDoc`]) is the interchange format; the line
//! DSL in [`dsl`] desugars into it. A [`Circuit`] is a document that passed
//! [`validate_dag`] together with the indices the engine needs.

mod doc;
pub mod dsl;
mod validate;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use doc::{CircuitDoc, Condition, Event, System, Test, Theory, Wire, CLASSICAL_INPUT};
pub use validate::{
    validate_dag, validate_dag_with, ConditionSource, PortKind, ValidationReport, Violation,
    TRACE_NONINCREASING_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("syntax error at line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("invalid circuit: {}", summarize(.violations))]
    Invalid { violations: Vec<Violation> },
}

fn summarize(v: &[Violation]) -> String {
    match v {
        [] => "no violations".into(),
        [one] => one.to_string(),
        [first, rest @ ..] => format!("{first} (and {} more)", rest.len()),
    }
}

impl CircuitError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            CircuitError::Invalid { violations } => violations,
            CircuitError::Syntax { .. } => &[],
        }
    }
}

/// A validated, immutable circuit.
#[derive(Clone, Debug)]
pub struct Circuit {
    doc: CircuitDoc,
    structure: validate::Structure,
}

impl Circuit {
    pub fn from_doc(doc: CircuitDoc) -> Result<Self, CircuitError> {
        Self::from_doc_with(doc, TRACE_NONINCREASING_TOL)
    }

    /// Validates with a custom tolerance for `Σ K†K ≤ I`.
    pub fn from_doc_with(doc: CircuitDoc, tol: f64) -> Result<Self, CircuitError> {
        let (report, structure) = validate::analyze(&doc, tol);
        match structure {
            Some(structure) => Ok(Self { doc, structure }),
            None => Err(CircuitError::Invalid {
                violations: report.violations,
            }),
        }
    }

    pub fn doc(&self) -> &CircuitDoc {
        &self.doc
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn nodes(&self) -> &[Test] {
        &self.doc.nodes
    }

    pub fn node(&self, i: usize) -> &Test {
        &self.doc.nodes[i]
    }

    pub fn node_count(&self) -> usize {
        self.doc.nodes.len()
    }

    pub fn wires(&self) -> &[Wire] {
        &self.doc.wires
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.structure.node_index.get(label).copied()
    }

    pub fn node_indices(&self) -> &HashMap<String, usize> {
        &self.structure.node_index
    }

    /// Topological order over wires and conditioning edges, ties broken by
    /// declaration order.
    pub fn topological_order(&self) -> &[usize] {
        &self.structure.topo
    }

    pub fn input_dims(&self, node: usize) -> &[usize] {
        &self.structure.in_dims[node]
    }

    pub fn output_dims(&self, node: usize) -> &[usize] {
        &self.structure.out_dims[node]
    }

    /// Wire index feeding input `port` of `node`, `None` if the port is open.
    pub fn input_wire(&self, node: usize, port: usize) -> Option<usize> {
        self.structure.input_wire[node][port]
    }

    pub fn output_wire(&self, node: usize, port: usize) -> Option<usize> {
        self.structure.output_wire[node][port]
    }

    pub fn condition_source(&self, node: usize) -> Option<ConditionSource> {
        self.structure.condition[node]
    }

    /// Whether every branch of `node` is a deterministic test.
    pub fn is_deterministic(&self, node: usize) -> bool {
        self.structure.deterministic[node].iter().all(|&d| d)
    }

    /// True when every node's events are atomic.
    pub fn is_atomic(&self) -> bool {
        self.doc.nodes.iter().all(|n| n.events.iter().all(Event::is_atomic))
    }

    pub fn uses_classical_input(&self) -> bool {
        self.structure
            .condition
            .iter()
            .any(|c| *c == Some(ConditionSource::ClassicalInput))
    }

    /// Open input ports `(node, port)` in declaration order.
    pub fn open_inputs(&self) -> Vec<(usize, usize)> {
        self.open_ports(&self.structure.input_wire)
    }

    /// Open output ports `(node, port)` in declaration order.
    pub fn open_outputs(&self) -> Vec<(usize, usize)> {
        self.open_ports(&self.structure.output_wire)
    }

    fn open_ports(&self, table: &[Vec<Option<usize>>]) -> Vec<(usize, usize)> {
        table
            .iter()
            .enumerate()
            .flat_map(|(n, ports)| {
                ports
                    .iter()
                    .enumerate()
                    .filter(|(_, w)| w.is_none())
                    .map(move |(p, _)| (n, p))
            })
            .collect()
    }

    /// No dangling ports.
    pub fn is_closed(&self) -> bool {
        self.open_inputs().is_empty() && self.open_outputs().is_empty()
    }

    pub fn to_json(&self) -> String {
        to_json(&self.doc)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} nodes, {} wires)", self.doc.name, self.node_count(), self.doc.wires.len())
    }
}

/// Canonical pretty-printed JSON of a document.
pub fn to_json(doc: &CircuitDoc) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("circuit documents always serialize");
    s.push('\n');
    s
}

/// Parses a JSON document (first non-blank character `{`) or DSL text, then
/// validates it.
pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    Circuit::from_doc(parse_document(text)?)
}

/// Parses without validating.
pub fn parse_document(text: &str) -> Result<CircuitDoc, CircuitError> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| CircuitError::Syntax {
            line: e.line(),
            col: e.column(),
            message: e.to_string(),
        })
    } else {
        dsl::parse(text)
    }
}

/// Nodes grouped by undirected connectivity through wires and conditioning
/// edges. Components are sorted by their first node index.
pub fn connected_components(c: &Circuit) -> Vec<Vec<usize>> {
    let n = c.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut union = |a: usize, b: usize| {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for w in c.wires() {
        union(c.node_index(&w.from.0).unwrap(), c.node_index(&w.to.0).unwrap());
    }
    for i in 0..n {
        if let Some(ConditionSource::Node(j)) = c.condition_source(i) {
            union(i, j);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        let g = *slot.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}
