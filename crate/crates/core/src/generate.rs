//! Random valid circuits for property tests and benchmarks.

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::circuit::{Circuit, CircuitDoc, Condition, Event, System, Test, Theory, Wire};
use crate::engine::Program;
use crate::linalg::{ComplexMatrix, C64};
use crate::random::{haar_unitary, random_test};

/// Shape of the generated circuits.
#[derive(Clone, Debug)]
pub struct RandomCircuitSpec {
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// Bound on the product of the dimensions of every wire and dangling
    /// port, hence on every cut.
    pub max_total_dim: usize,
    /// Probability that a node is conditioned on an earlier one.
    pub condition_probability: f64,
    /// Probability of a node taking an extra open input.
    pub open_input_probability: f64,
}

impl Default for RandomCircuitSpec {
    fn default() -> Self {
        Self {
            min_nodes: 4,
            max_nodes: 8,
            max_total_dim: 64,
            condition_probability: 0.3,
            open_input_probability: 0.2,
        }
    }
}

fn system_label(dim: usize) -> String {
    format!("Q{dim}")
}

/// A random deterministic test on `d_in → d_out` with `outcomes` events
/// labelled from `first`.
fn events<R: Rng + ?Sized>(d_in: usize, d_out: usize, outcomes: usize, first: usize, rng: &mut R) -> Vec<Event> {
    random_test(d_in, d_out, outcomes, rng)
        .into_iter()
        .enumerate()
        .map(|(i, k)| Event::atomic((first + i).to_string(), k))
        .collect()
}

/// A random valid circuit of deterministic atomic tests with qubit and qutrit
/// wires, optional conditioning and possibly dangling ports.
pub fn random_circuit<R: Rng + ?Sized>(rng: &mut R, spec: &RandomCircuitSpec) -> Circuit {
    let n = rng.random_range(spec.min_nodes..=spec.max_nodes);
    let mut budget = 1usize;
    let mut pool: Vec<(String, usize, usize)> = Vec::new();
    let mut nodes: Vec<Test> = Vec::new();
    let mut wires = Vec::new();
    for i in 0..n {
        let label = format!("n{i}");
        pool.shuffle(rng);
        let k_in = rng.random_range(0..=pool.len().min(2));
        let taken: Vec<(String, usize, usize)> = pool.drain(..k_in).collect();
        let mut in_dims: Vec<usize> = taken.iter().map(|t| t.2).collect();
        for (port, (from, fport, _)) in taken.iter().enumerate() {
            wires.push(Wire {
                from: (from.clone(), *fport),
                to: (label.clone(), port),
            });
        }
        if rng.random::<f64>() < spec.open_input_probability && budget * 2 <= spec.max_total_dim {
            budget *= 2;
            in_dims.push(2);
        }
        let mut out_dims = Vec::new();
        for _ in 0..rng.random_range(0..=2) {
            let d = if rng.random::<f64>() < 0.75 { 2 } else { 3 };
            if budget * d <= spec.max_total_dim {
                budget *= d;
                out_dims.push(d);
            }
        }
        if in_dims.is_empty() && out_dims.is_empty() {
            if budget * 2 > spec.max_total_dim {
                continue;
            }
            budget *= 2;
            out_dims.push(2);
        }
        for (port, &d) in out_dims.iter().enumerate() {
            pool.push((label.clone(), port, d));
        }
        let d_in: usize = in_dims.iter().product();
        let d_out: usize = out_dims.iter().product();
        let min_outcomes = d_in.div_ceil(d_out);
        let outcomes = |rng: &mut R| rng.random_range(1..=3usize).max(min_outcomes);

        let conditioned = !nodes.is_empty() && rng.random::<f64>() < spec.condition_probability;
        let (evs, condition) = if conditioned {
            let (a, b) = (outcomes(rng), outcomes(rng));
            let source = &nodes[rng.random_range(0..nodes.len())];
            let mut evs = events(d_in, d_out, a, 0, rng);
            evs.extend(events(d_in, d_out, b, a, rng));
            let map: IndexMap<String, Vec<usize>> = source
                .events
                .iter()
                .enumerate()
                .map(|(j, e)| {
                    let idx = if j % 2 == 0 { (0..a).collect() } else { (a..a + b).collect() };
                    (e.outcome.clone(), idx)
                })
                .collect();
            (
                evs,
                Some(Condition {
                    source: source.label.clone(),
                    map,
                }),
            )
        } else {
            let o = outcomes(rng);
            (events(d_in, d_out, o, 0, rng), None)
        };
        nodes.push(Test {
            label,
            inputs: in_dims.iter().map(|&d| system_label(d)).collect(),
            outputs: out_dims.iter().map(|&d| system_label(d)).collect(),
            events: evs,
            condition,
        });
    }
    let doc = CircuitDoc {
        name: "random".into(),
        systems: [2, 3]
            .into_iter()
            .map(|d| System {
                label: system_label(d),
                dim: d,
                theory: Theory::Quantum,
            })
            .collect(),
        nodes,
        wires,
        closed: false,
    };
    Circuit::from_doc(doc).expect("generated circuits are valid")
}

fn cnot() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4, 4);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m[(r, c)] = C64::new(1.0, 0.0);
    }
    m
}

/// One layer on `n` qubits: a Haar-random single-qubit unitary on every
/// wire, then CNOTs on the pairs `(0,1), (2,3), …`. Inputs and outputs are
/// both in qubit order.
pub fn unitary_layer<R: Rng + ?Sized>(name: &str, n: usize, rng: &mut R) -> Circuit {
    let q = |s: &str| s.to_string();
    let mut nodes: Vec<Test> = (0..n)
        .map(|k| Test {
            label: format!("u{k}"),
            inputs: vec![q("Q")],
            outputs: vec![q("Q")],
            events: vec![Event::atomic("u", haar_unitary(2, rng))],
            condition: None,
        })
        .collect();
    let mut wires = Vec::new();
    for k in (0..n.saturating_sub(1)).step_by(2) {
        let label = format!("cx{k}");
        for port in 0..2 {
            wires.push(Wire {
                from: (format!("u{}", k + port), 0),
                to: (label.clone(), port),
            });
        }
        nodes.push(Test {
            label,
            inputs: vec![q("Q"), q("Q")],
            outputs: vec![q("Q"), q("Q")],
            events: vec![Event::atomic("cx", cnot())],
            condition: None,
        });
    }
    let doc = CircuitDoc {
        name: name.into(),
        systems: vec![System {
            label: q("Q"),
            dim: 2,
            theory: Theory::Quantum,
        }],
        nodes,
        wires,
        closed: false,
    };
    Circuit::from_doc(doc).expect("layers are valid")
}

/// `steps` random unitary layers on `n` qubits (even `n`), each step's
/// input rotated by one qubit so that entanglement spreads around the ring.
pub fn unitary_program<R: Rng + ?Sized>(n: usize, steps: usize, rng: &mut R) -> Program {
    assert!(n >= 2 && n % 2 == 0, "an even number of qubits is needed");
    let circuits: Vec<Circuit> = (0..steps).map(|t| unitary_layer(&format!("layer{t}"), n, rng)).collect();
    let shift: Vec<usize> = (0..n).map(|k| (k + 1) % n).collect();
    let plan = (0..steps)
        .map(|t| (t, None, (t > 0).then(|| shift.clone())))
        .collect();
    Program::new(format!("unitary_{n}x{steps}"), circuits, plan, None).expect("layers link")
}
