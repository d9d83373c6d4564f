use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::doc::{CircuitDoc, Theory, CLASSICAL_INPUT};
use crate::linalg::{hermitian_eigen, ComplexMatrix};

/// Tolerance on `Σ K†K ≤ I` used when validating tests.
pub const TRACE_NONINCREASING_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PortKind {
    Input,
    Output,
}

impl fmt::Display for PortKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PortKind::Input => "input",
            PortKind::Output => "output",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    DuplicateSystem { system: String },
    DuplicateNode { node: String },
    BadSystemDim { system: String, dim: usize },
    UnknownSystem { node: String, system: String },
    EmptyEvents { node: String },
    DuplicateOutcome { node: String, outcome: String },
    KrausShape { node: String, event: usize, expected: (usize, usize), got: (usize, usize) },
    NotTraceNonIncreasing { node: String, branch: Option<String>, excess: f64 },
    UnknownNode { wire: usize, node: String },
    PortOutOfRange { wire: usize, node: String, port: usize, kind: PortKind },
    PortReused { node: String, port: usize, kind: PortKind },
    TypeMismatch { wire: usize, from: String, to: String },
    DimensionMismatch { wire: usize, from_dim: usize, to_dim: usize },
    UnknownConditionSource { node: String, source: String },
    BadConditionMap { node: String, detail: String },
    Cycle { nodes: Vec<String> },
    Dangling { node: String, port: usize, kind: PortKind },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateSystem { system } => write!(f, "system `{system}` declared twice"),
            DuplicateNode { node } => write!(f, "node `{node}` declared twice"),
            BadSystemDim { system, dim } => write!(f, "system `{system}` has invalid dimension {dim}"),
            UnknownSystem { node, system } => write!(f, "node `{node}` references unknown system `{system}`"),
            EmptyEvents { node } => write!(f, "node `{node}` has no events"),
            DuplicateOutcome { node, outcome } => write!(f, "node `{node}` repeats outcome `{outcome}`"),
            KrausShape { node, event, expected, got } => write!(
                f,
                "node `{node}` event {event}: Kraus operator is {}x{}, signature needs {}x{}",
                got.0, got.1, expected.0, expected.1
            ),
            NotTraceNonIncreasing { node, branch, excess } => match branch {
                Some(b) => write!(f, "node `{node}` branch `{b}` is not trace-nonincreasing (excess {excess:.3e})"),
                None => write!(f, "node `{node}` is not trace-nonincreasing (excess {excess:.3e})"),
            },
            UnknownNode { wire, node } => write!(f, "wire {wire} references unknown node `{node}`"),
            PortOutOfRange { wire, node, port, kind } => {
                write!(f, "wire {wire}: node `{node}` has no {kind} port {port}")
            }
            PortReused { node, port, kind } => write!(f, "{kind} port {node}.{port} is wired more than once"),
            TypeMismatch { wire, from, to } => write!(f, "wire {wire} connects system `{from}` to `{to}`"),
            DimensionMismatch { wire, from_dim, to_dim } => {
                write!(f, "wire {wire}: dimension mismatch ({from_dim} -> {to_dim})")
            }
            UnknownConditionSource { node, source } => {
                write!(f, "node `{node}` is conditioned on unknown source `{source}`")
            }
            BadConditionMap { node, detail } => write!(f, "node `{node}` condition map: {detail}"),
            Cycle { nodes } => write!(f, "cycle detected among nodes {}", nodes.join(", ")),
            Dangling { node, port, kind } => write!(f, "closed circuit has dangling {kind} port {node}.{port}"),
        }
    }
}

/// Outcome of [`validate_dag`]: every violation found, plus the topological
/// order and closure status when the graph is acyclic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub name: String,
    pub node_count: usize,
    pub violations: Vec<Violation>,
    pub topological_order: Option<Vec<String>>,
    /// No dangling ports (a CDAG).
    pub closed: bool,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            writeln!(
                f,
                "circuit `{}`: OK, {} nodes, {}",
                self.name,
                self.node_count,
                if self.closed { "closed" } else { "open" }
            )?;
            if let Some(order) = &self.topological_order {
                writeln!(f, "topological order: {}", order.join(" "))?;
            }
        } else {
            writeln!(f, "circuit `{}`: {} violation(s)", self.name, self.violations.len())?;
            for v in &self.violations {
                writeln!(f, "  - {v}")?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionSource {
    Node(usize),
    ClassicalInput,
}

/// Resolved indices of a valid document.
#[derive(Clone, Debug)]
pub(crate) struct Structure {
    pub node_index: HashMap<String, usize>,
    pub in_dims: Vec<Vec<usize>>,
    pub out_dims: Vec<Vec<usize>>,
    /// Wire index feeding each input port, `None` when the port is open.
    pub input_wire: Vec<Vec<Option<usize>>>,
    pub output_wire: Vec<Vec<Option<usize>>>,
    pub condition: Vec<Option<ConditionSource>>,
    pub topo: Vec<usize>,
    /// `deterministic[node][branch]`, branch order as in the condition map.
    pub deterministic: Vec<Vec<bool>>,
}

/// Checks a circuit document for every structural and algebraic violation.
pub fn validate_dag(doc: &CircuitDoc) -> ValidationReport {
    analyze(doc, TRACE_NONINCREASING_TOL).0
}

pub fn validate_dag_with(doc: &CircuitDoc, tol: f64) -> ValidationReport {
    analyze(doc, tol).0
}

/// Largest eigenvalue of `Σ K†K` minus one, and whether the sum is `I`.
fn branch_excess(ops: &[&ComplexMatrix], tol: f64) -> Option<(f64, bool)> {
    let sum = ComplexMatrix::gram_sum(ops.iter().copied())?;
    let id = ComplexMatrix::identity(sum.rows());
    if sum.max_abs_diff(&id) <= tol {
        return Some((0.0, true));
    }
    let (values, _) = hermitian_eigen(&sum).ok()?;
    Some((values[0] - 1.0, false))
}

pub(crate) fn analyze(doc: &CircuitDoc, tol: f64) -> (ValidationReport, Option<Structure>) {
    let mut v = Vec::new();

    let mut systems = HashMap::new();
    for s in &doc.systems {
        if systems.insert(s.label.as_str(), s).is_some() {
            v.push(Violation::DuplicateSystem { system: s.label.clone() });
        }
        if s.dim == 0 || (s.theory == Theory::Trivial && s.dim != 1) {
            v.push(Violation::BadSystemDim { system: s.label.clone(), dim: s.dim });
        }
    }

    let mut node_index = HashMap::new();
    for (i, n) in doc.nodes.iter().enumerate() {
        if node_index.insert(n.label.clone(), i).is_some() {
            v.push(Violation::DuplicateNode { node: n.label.clone() });
        }
    }

    let dims_of = |node: &str, labels: &[String], v: &mut Vec<Violation>| -> Vec<usize> {
        labels
            .iter()
            .map(|l| match systems.get(l.as_str()) {
                Some(s) => s.dim.max(1),
                None => {
                    v.push(Violation::UnknownSystem { node: node.to_string(), system: l.clone() });
                    1
                }
            })
            .collect()
    };
    let mut in_dims = Vec::new();
    let mut out_dims = Vec::new();
    for n in &doc.nodes {
        in_dims.push(dims_of(&n.label, &n.inputs, &mut v));
        out_dims.push(dims_of(&n.label, &n.outputs, &mut v));
    }

    // Events and Kraus shapes.
    let mut shapes_ok = vec![true; doc.nodes.len()];
    for (i, n) in doc.nodes.iter().enumerate() {
        if n.events.is_empty() {
            v.push(Violation::EmptyEvents { node: n.label.clone() });
            shapes_ok[i] = false;
        }
        let mut seen = HashSet::new();
        let expected = (out_dims[i].iter().product(), in_dims[i].iter().product());
        for (e, ev) in n.events.iter().enumerate() {
            if !seen.insert(ev.outcome.as_str()) {
                v.push(Violation::DuplicateOutcome { node: n.label.clone(), outcome: ev.outcome.clone() });
            }
            if ev.kraus.is_empty() {
                v.push(Violation::EmptyEvents { node: n.label.clone() });
                shapes_ok[i] = false;
            }
            for k in &ev.kraus {
                if k.shape() != expected {
                    v.push(Violation::KrausShape {
                        node: n.label.clone(),
                        event: e,
                        expected,
                        got: k.shape(),
                    });
                    shapes_ok[i] = false;
                }
            }
        }
    }

    // Conditioning.
    let mut condition = vec![None; doc.nodes.len()];
    for (i, n) in doc.nodes.iter().enumerate() {
        let Some(c) = &n.condition else { continue };
        let src = if c.source == CLASSICAL_INPUT {
            Some(ConditionSource::ClassicalInput)
        } else {
            node_index.get(&c.source).map(|&j| ConditionSource::Node(j))
        };
        match src {
            None => v.push(Violation::UnknownConditionSource { node: n.label.clone(), source: c.source.clone() }),
            Some(s) => {
                condition[i] = Some(s);
                if let ConditionSource::Node(j) = s {
                    for ev in &doc.nodes[j].events {
                        if !c.map.contains_key(&ev.outcome) {
                            v.push(Violation::BadConditionMap {
                                node: n.label.clone(),
                                detail: format!("no branch for outcome `{}` of `{}`", ev.outcome, c.source),
                            });
                        }
                    }
                    for key in c.map.keys() {
                        if doc.nodes[j].outcome_index(key).is_none() {
                            v.push(Violation::BadConditionMap {
                                node: n.label.clone(),
                                detail: format!("`{}` has no outcome `{key}`", c.source),
                            });
                        }
                    }
                }
            }
        }
        if c.map.is_empty() {
            v.push(Violation::BadConditionMap { node: n.label.clone(), detail: "empty map".into() });
        }
        for (key, idx) in &c.map {
            if idx.is_empty() {
                v.push(Violation::BadConditionMap {
                    node: n.label.clone(),
                    detail: format!("branch `{key}` selects no events"),
                });
            }
            if let Some(bad) = idx.iter().find(|&&e| e >= n.events.len()) {
                v.push(Violation::BadConditionMap {
                    node: n.label.clone(),
                    detail: format!("branch `{key}` selects missing event {bad}"),
                });
                shapes_ok[i] = false;
            }
        }
    }

    // Each branch must be a test.
    let mut deterministic = vec![Vec::new(); doc.nodes.len()];
    for (i, n) in doc.nodes.iter().enumerate() {
        if !shapes_ok[i] {
            continue;
        }
        let branches: Vec<(Option<String>, Vec<usize>)> = match &n.condition {
            None => vec![(None, (0..n.events.len()).collect())],
            Some(c) => c.map.iter().map(|(k, idx)| (Some(k.clone()), idx.clone())).collect(),
        };
        for (label, idx) in branches {
            let ops: Vec<&ComplexMatrix> = idx.iter().flat_map(|&e| n.events[e].kraus.iter()).collect();
            match branch_excess(&ops, tol) {
                Some((excess, det)) => {
                    deterministic[i].push(det);
                    if excess > tol {
                        v.push(Violation::NotTraceNonIncreasing { node: n.label.clone(), branch: label, excess });
                    }
                }
                None => deterministic[i].push(false),
            }
        }
    }

    // Wires.
    let mut input_wire: Vec<Vec<Option<usize>>> = in_dims.iter().map(|d| vec![None; d.len()]).collect();
    let mut output_wire: Vec<Vec<Option<usize>>> = out_dims.iter().map(|d| vec![None; d.len()]).collect();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (w, wire) in doc.wires.iter().enumerate() {
        let from = node_index.get(&wire.from.0).copied();
        let to = node_index.get(&wire.to.0).copied();
        if from.is_none() {
            v.push(Violation::UnknownNode { wire: w, node: wire.from.0.clone() });
        }
        if to.is_none() {
            v.push(Violation::UnknownNode { wire: w, node: wire.to.0.clone() });
        }
        let (Some(a), Some(b)) = (from, to) else { continue };
        let (pa, pb) = (wire.from.1, wire.to.1);
        let mut ports_ok = true;
        if pa >= out_dims[a].len() {
            v.push(Violation::PortOutOfRange { wire: w, node: wire.from.0.clone(), port: pa, kind: PortKind::Output });
            ports_ok = false;
        }
        if pb >= in_dims[b].len() {
            v.push(Violation::PortOutOfRange { wire: w, node: wire.to.0.clone(), port: pb, kind: PortKind::Input });
            ports_ok = false;
        }
        if !ports_ok {
            continue;
        }
        if output_wire[a][pa].replace(w).is_some() {
            v.push(Violation::PortReused { node: wire.from.0.clone(), port: pa, kind: PortKind::Output });
        }
        if input_wire[b][pb].replace(w).is_some() {
            v.push(Violation::PortReused { node: wire.to.0.clone(), port: pb, kind: PortKind::Input });
        }
        let (sa, sb) = (&doc.nodes[a].outputs[pa], &doc.nodes[b].inputs[pb]);
        if out_dims[a][pa] != in_dims[b][pb] {
            v.push(Violation::DimensionMismatch { wire: w, from_dim: out_dims[a][pa], to_dim: in_dims[b][pb] });
        } else if sa != sb {
            v.push(Violation::TypeMismatch { wire: w, from: sa.clone(), to: sb.clone() });
        }
        edges.push((a, b));
    }
    for (i, c) in condition.iter().enumerate() {
        if let Some(ConditionSource::Node(j)) = c {
            edges.push((*j, i));
        }
    }

    // Kahn's algorithm, ties broken by declaration order.
    let n = doc.nodes.len();
    let mut indeg = vec![0usize; n];
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in &edges {
        indeg[b] += 1;
        succ[a].push(b);
    }
    let mut heap: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| indeg[i] == 0).map(Reverse).collect();
    let mut topo = Vec::with_capacity(n);
    while let Some(Reverse(i)) = heap.pop() {
        topo.push(i);
        for &j in &succ[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                heap.push(Reverse(j));
            }
        }
    }
    let acyclic = topo.len() == n;
    if !acyclic {
        let stuck = (0..n).filter(|&i| indeg[i] > 0).map(|i| doc.nodes[i].label.clone()).collect();
        v.push(Violation::Cycle { nodes: stuck });
    }

    let mut dangling = Vec::new();
    for (i, node) in doc.nodes.iter().enumerate() {
        for (p, w) in input_wire[i].iter().enumerate() {
            if w.is_none() {
                dangling.push(Violation::Dangling { node: node.label.clone(), port: p, kind: PortKind::Input });
            }
        }
        for (p, w) in output_wire[i].iter().enumerate() {
            if w.is_none() {
                dangling.push(Violation::Dangling { node: node.label.clone(), port: p, kind: PortKind::Output });
            }
        }
    }
    let closed = dangling.is_empty();
    if doc.closed {
        v.extend(dangling);
    }

    let report = ValidationReport {
        name: doc.name.clone(),
        node_count: n,
        topological_order: acyclic.then(|| topo.iter().map(|&i| doc.nodes[i].label.clone()).collect()),
        closed,
        violations: v,
    };
    let structure = report.is_ok().then(|| Structure {
        node_index,
        in_dims,
        out_dims,
        input_wire,
        output_wire,
        condition,
        topo,
        deterministic,
    });
    (report, structure)
}
