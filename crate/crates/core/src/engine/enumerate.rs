use crate::circuit::Circuit;
use crate::linalg::ComplexMatrix;

use super::foliation::event_kraus;
use super::layout::{Register, WireTable};
use super::program::Program;
use super::sample::branch_of;
use super::{EngineConfig, EngineError, Result};

/// Event index per node (declaration order), one row per step.
pub type History = Vec<Vec<usize>>;

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryEntry {
    pub history: History,
    /// `‖Ω_t ω₀‖²`.
    pub probability: f64,
}

/// Operator of one step for the given events, built by applying nodes one at
/// a time to the identity on the input leaf.
pub fn step_operator(c: &Circuit, table: &WireTable, events: &[usize], max_dim: usize) -> Result<ComplexMatrix> {
    let mut reg = Register::new(table, table.input_leaf());
    let mut m = ComplexMatrix::identity(reg.dim());
    for &node in c.topological_order() {
        let e = *events
            .get(node)
            .filter(|&&e| e != usize::MAX)
            .ok_or_else(|| EngineError::MissingOutcome(c.node(node).label.clone()))?;
        let k = event_kraus(c, node, e)?;
        let (r, next) = reg.apply(table, table.node_inputs(node), table.node_outputs(node), k, &m, max_dim)?;
        reg = r;
        m = next;
    }
    reg.reorder(table.output_leaf(), &m)
}

/// History operator `Ω = O_T ⋯ O_1` of a program, links included.
pub fn history_operator(program: &Program, history: &[Vec<usize>], max_dim: usize) -> Result<ComplexMatrix> {
    if history.len() != program.steps().len() {
        return Err(EngineError::Malformed(format!(
            "history has {} steps, program {}",
            history.len(),
            program.steps().len()
        )));
    }
    let mut omega = ComplexMatrix::identity(program.initial_state().dim());
    for (t, events) in history.iter().enumerate() {
        let linked = program.link_into(t, &omega)?;
        omega = step_operator(program.circuit(t), program.table(t), events, max_dim)?.matmul(&linked)?;
    }
    Ok(omega)
}

/// `‖Ω ω₀‖²` for one history.
pub fn history_probability(program: &Program, history: &[Vec<usize>], max_dim: usize) -> Result<f64> {
    let omega = history_operator(program, history, max_dim)?;
    let out = omega.apply(program.initial_state())?;
    Ok(out.norm_sqr())
}

/// Number of outcome-consistent histories, failing once it exceeds `cap`.
pub fn count_histories(program: &Program, cap: usize) -> Result<usize> {
    let mut total: usize = 1;
    for (t, step) in program.steps().iter().enumerate() {
        let c = program.circuit(t);
        let mut events = vec![usize::MAX; c.node_count()];
        let n = count_step(c, 0, &mut events, step.input.as_deref(), t, cap)?;
        total = total
            .checked_mul(n)
            .filter(|&v| v <= cap)
            .ok_or(EngineError::HistoryCap { cap })?;
    }
    Ok(total)
}

fn count_step(
    c: &Circuit,
    pos: usize,
    events: &mut [usize],
    input: Option<&str>,
    step: usize,
    cap: usize,
) -> Result<usize> {
    let Some(&node) = c.topological_order().get(pos) else {
        return Ok(1);
    };
    let mut n = 0usize;
    for e in branch_of(c, node, events, input, step)? {
        events[node] = e;
        n += count_step(c, pos + 1, events, input, step, cap)?;
        if n > cap {
            return Err(EngineError::HistoryCap { cap });
        }
    }
    events[node] = usize::MAX;
    Ok(n)
}

struct Walk<'a> {
    program: &'a Program,
    max_dim: usize,
    history: History,
    out: Vec<HistoryEntry>,
}

impl Walk<'_> {
    fn step(&mut self, t: usize, state: &ComplexMatrix) -> Result<()> {
        if t == self.program.steps().len() {
            let p = state.data().iter().map(|z| z.norm_sqr()).sum();
            self.out.push(HistoryEntry {
                history: self.history.clone(),
                probability: p,
            });
            return Ok(());
        }
        let c = self.program.circuit(t);
        let table = self.program.table(t);
        let linked = self.program.link_into(t, state)?;
        self.history.push(vec![usize::MAX; c.node_count()]);
        self.node(t, 0, Register::new(table, table.input_leaf()), &linked)?;
        self.history.pop();
        Ok(())
    }

    fn node(&mut self, t: usize, pos: usize, reg: Register, m: &ComplexMatrix) -> Result<()> {
        let c = self.program.circuit(t);
        let table = self.program.table(t);
        let Some(&node) = c.topological_order().get(pos) else {
            let m = reg.reorder(table.output_leaf(), m)?;
            return self.step(t + 1, &m);
        };
        let input = self.program.steps()[t].input.clone();
        let branch = branch_of(c, node, &self.history[t], input.as_deref(), t)?;
        for e in branch {
            let k = event_kraus(c, node, e)?;
            let (r, next) = reg.apply(table, table.node_inputs(node), table.node_outputs(node), k, m, self.max_dim)?;
            self.history[t][node] = e;
            self.node(t, pos + 1, r, &next)?;
        }
        self.history[t][node] = usize::MAX;
        Ok(())
    }
}

/// Every outcome-consistent history with its probability `‖Ω ω₀‖²`, in
/// lexicographic order of events along the topological order. Zero-probability
/// histories are included.
pub fn enumerate_histories(program: &Program, config: &EngineConfig) -> Result<Vec<HistoryEntry>> {
    count_histories(program, config.history_cap)?;
    let mut walk = Walk {
        program,
        max_dim: config.max_dim,
        history: Vec::new(),
        out: Vec::new(),
    };
    walk.step(0, &ComplexMatrix::ket(program.initial_state()))?;
    Ok(walk.out)
}
