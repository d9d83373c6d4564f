use indexmap::IndexMap;
use rand::Rng;
use rayon::prelude::*;

use crate::circuit::{Circuit, ConditionSource};
use crate::linalg::{ComplexMatrix, StateVector, SystemShape};
use crate::random::stream_rng;

use super::enumerate::step_operator;
use super::foliation::event_kraus;
use super::layout::{Register, WireTable};
use super::program::Program;
use super::{EngineConfig, EngineError, Result, ZERO_WEIGHT};

/// Tolerance on `Σ‖Kψ‖² = 1` for deterministic tests.
const CONSISTENCY_TOL: f64 = 1e-9;

/// Event indices forming the test performed by `node`, given the events
/// already chosen upstream and the classical input.
pub(crate) fn branch_of(
    c: &Circuit,
    node: usize,
    events: &[usize],
    input: Option<&str>,
    step: usize,
) -> Result<Vec<usize>> {
    let test = c.node(node);
    let key = match c.condition_source(node) {
        None => None,
        Some(ConditionSource::Node(s)) => Some(c.node(s).events[events[s]].outcome.as_str()),
        Some(ConditionSource::ClassicalInput) => Some(input.ok_or(EngineError::MissingInput { step })?),
    };
    test.branch(key).ok_or_else(|| EngineError::UnknownInput {
        node: test.label.clone(),
        input: key.unwrap_or_default().to_string(),
    })
}

/// Outcome of one sampled step.
#[derive(Clone, Debug)]
pub struct StepSample {
    /// Event index per node (declaration order).
    pub events: Vec<usize>,
    /// Normalized post-state in output-leaf order.
    pub state: StateVector,
    /// `‖O_F ω‖²` for the normalized input `ω`.
    pub weight: f64,
    /// A sub-normalized test produced no outcome.
    pub aborted: bool,
}

fn column(psi: &StateVector) -> ComplexMatrix {
    ComplexMatrix::ket(psi)
}

fn norm_sqr(m: &ComplexMatrix) -> f64 {
    m.data().iter().map(|z| z.norm_sqr()).sum()
}

/// Samples the outcomes of one circuit node by node in topological order.
/// Each event is drawn with probability `‖K_e ψ‖²` relative to the current
/// normalized prefix state; the product of these is `‖O_F ω‖²`.
pub fn sample_step<R: Rng + ?Sized>(
    c: &Circuit,
    table: &WireTable,
    omega: &StateVector,
    input: Option<&str>,
    rng: &mut R,
    max_dim: usize,
) -> Result<StepSample> {
    let mut reg = Register::new(table, table.input_leaf());
    if omega.dim() != reg.dim() {
        return Err(EngineError::StateDimension {
            expected: reg.dim(),
            got: omega.dim(),
        });
    }
    let mut m = column(omega);
    let mut events = vec![usize::MAX; c.node_count()];
    let mut weight = 1.0;
    for &node in c.topological_order() {
        let branch = branch_of(c, node, &events, input, 0)?;
        let mut options = Vec::with_capacity(branch.len());
        let mut total = 0.0;
        for &e in &branch {
            let k = event_kraus(c, node, e)?;
            let (r, next) = reg.apply(table, table.node_inputs(node), table.node_outputs(node), k, &m, max_dim)?;
            let w = norm_sqr(&next);
            total += w;
            options.push((e, w, r, next));
        }
        let deterministic = c.is_deterministic(node);
        if deterministic && (total - 1.0).abs() > CONSISTENCY_TOL {
            return Err(EngineError::TestInconsistency {
                node: c.node(node).label.clone(),
                total,
            });
        }
        let eligible: f64 = options.iter().filter(|o| o.1 >= ZERO_WEIGHT).map(|o| o.1).sum();
        // Deterministic tests renormalize away rounding; otherwise the
        // missing mass is the probability that nothing happens.
        let scale = if deterministic { eligible } else { 1.0 };
        let u = rng.random::<f64>() * scale;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, o) in options.iter().enumerate() {
            if o.1 < ZERO_WEIGHT {
                continue;
            }
            acc += o.1;
            chosen = Some(i);
            if u < acc {
                break;
            }
        }
        let chosen = match chosen {
            Some(i) if u < acc || deterministic => i,
            _ => {
                let dims = reg.dims.clone();
                return Ok(StepSample {
                    events,
                    state: StateVector::new(vec![Default::default(); dims.iter().product()])?,
                    weight: 0.0,
                    aborted: true,
                });
            }
        };
        let (e, w, r, next) = options.swap_remove(chosen);
        events[node] = e;
        weight *= w;
        m = next.scale((1.0 / w.sqrt()).into());
        reg = r;
    }
    let m = reg.reorder(table.output_leaf(), &m)?;
    Ok(StepSample {
        events,
        state: StateVector::new(m.into_data())?,
        weight,
        aborted: false,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryStep {
    pub input: Option<String>,
    /// Event index per node (declaration order).
    pub events: Vec<usize>,
    /// Node label to outcome label, in topological order.
    pub outcomes: IndexMap<String, String>,
    /// Conditional probability of this step's outcomes.
    pub weight: f64,
    pub state: Option<StateVector>,
    pub shape: Option<SystemShape>,
    pub operator: Option<ComplexMatrix>,
}

/// A sampled history.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub stream: u64,
    pub steps: Vec<TrajectoryStep>,
    /// `‖Ω_t ω₀‖²`, the product of step weights.
    pub probability: f64,
    /// A sub-normalized test produced no outcome; the history stops there.
    pub aborted: bool,
    pub final_state: StateVector,
    pub final_shape: SystemShape,
}

impl Trajectory {
    pub fn history(&self) -> Vec<Vec<usize>> {
        self.steps.iter().map(|s| s.events.clone()).collect()
    }
}

fn outcome_labels(c: &Circuit, events: &[usize]) -> IndexMap<String, String> {
    c.topological_order()
        .iter()
        .filter(|&&n| events[n] != usize::MAX)
        .map(|&n| (c.node(n).label.clone(), c.node(n).events[events[n]].outcome.clone()))
        .collect()
}

/// One trajectory on RNG stream `stream` of `seed`.
pub fn run_trajectory(program: &Program, seed: u64, stream: u64, config: &EngineConfig) -> Result<Trajectory> {
    let mut rng = stream_rng(seed, stream);
    let mut state = program.initial_state().clone();
    let mut steps = Vec::with_capacity(program.steps().len());
    let mut probability = 1.0;
    let mut aborted = false;
    let mut shape = program.input_shape(0);
    for (t, step) in program.steps().iter().enumerate() {
        let c = program.circuit(t);
        let linked = program.link_into(t, &column(&state))?;
        let omega = StateVector::new(linked.into_data())?;
        let sample = sample_step(c, program.table(t), &omega, step.input.as_deref(), &mut rng, config.max_dim)
            .map_err(|e| match e {
                EngineError::MissingInput { .. } => EngineError::MissingInput { step: t },
                other => other,
            })?;
        probability *= sample.weight;
        let operator = if config.store_operators && !sample.aborted {
            Some(step_operator(c, program.table(t), &sample.events, config.max_dim)?)
        } else {
            None
        };
        let out_shape = program.output_shape(t);
        steps.push(TrajectoryStep {
            input: step.input.clone(),
            outcomes: outcome_labels(c, &sample.events),
            events: sample.events,
            weight: sample.weight,
            state: (config.store_states && !sample.aborted).then(|| sample.state.clone()),
            shape: (config.store_states && !sample.aborted).then(|| out_shape.clone()),
            operator,
        });
        if sample.aborted {
            aborted = true;
            break;
        }
        state = sample.state;
        shape = out_shape;
    }
    Ok(Trajectory {
        seed,
        stream,
        steps,
        probability,
        aborted,
        final_state: state,
        final_shape: shape,
    })
}

/// `n` trajectories on streams `0..n`, in parallel, ordered by index.
pub fn run_many(program: &Program, seed: u64, n: usize, config: &EngineConfig) -> Result<Vec<Trajectory>> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| run_trajectory(program, seed, i, config))
        .collect()
}
