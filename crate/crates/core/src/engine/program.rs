use serde::{Deserialize, Serialize};

use crate::circuit::{parse_document, Circuit, CircuitDoc, CircuitError, TRACE_NONINCREASING_TOL};
use crate::linalg::{permute_factors, ComplexMatrix, StateVector, SystemShape, TAU_NORM};

use super::layout::WireTable;
use super::{EngineError, Result};

/// A circuit inside a program file: a JSON document or DSL text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CircuitSource {
    Doc(CircuitDoc),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDoc {
    pub circuit: String,
    #[serde(default)]
    pub input: Option<String>,
    /// Input `k` of this step is output `link[k]` of the previous one.
    #[serde(default)]
    pub link: Option<Vec<usize>>,
}

/// A sequence of circuits, one per time step, on a shared ontic state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<StateVector>,
    pub circuits: Vec<CircuitSource>,
    pub steps: Vec<StepDoc>,
}

#[derive(Clone, Debug)]
pub struct ProgramStep {
    pub circuit: usize,
    pub input: Option<String>,
    pub link: Vec<usize>,
}

/// A validated program: circuits, their wire tables, steps and `ω₀`.
#[derive(Clone, Debug)]
pub struct Program {
    name: String,
    circuits: Vec<Circuit>,
    tables: Vec<WireTable>,
    steps: Vec<ProgramStep>,
    initial_state: StateVector,
}

fn zero_state(dim: usize) -> StateVector {
    StateVector::basis(dim, 0)
}

impl Program {
    /// One step of `c` from `|0…0⟩`.
    pub fn single(c: Circuit) -> Self {
        let table = WireTable::new(&c);
        let dim = table.dim(table.input_leaf());
        Self {
            name: c.name().to_string(),
            steps: vec![ProgramStep {
                circuit: 0,
                input: None,
                link: Vec::new(),
            }],
            circuits: vec![c],
            tables: vec![table],
            initial_state: zero_state(dim),
        }
    }

    /// `steps` are `(circuit index, classical input, link)`; a `None` link is
    /// the identity.
    pub fn new(
        name: impl Into<String>,
        circuits: Vec<Circuit>,
        steps: Vec<(usize, Option<String>, Option<Vec<usize>>)>,
        initial_state: Option<StateVector>,
    ) -> Result<Self> {
        if steps.is_empty() {
            return Err(EngineError::EmptyProgram);
        }
        let tables: Vec<WireTable> = circuits.iter().map(WireTable::new).collect();
        let mut out = Vec::with_capacity(steps.len());
        for (t, (ci, input, link)) in steps.into_iter().enumerate() {
            let table = tables
                .get(ci)
                .ok_or_else(|| EngineError::UnknownCircuit(ci.to_string()))?;
            let n_in = table.input_leaf().len();
            let link = match (t, link) {
                (0, Some(l)) if !l.is_empty() => {
                    return Err(EngineError::Link {
                        step: 0,
                        detail: format!("the first step cannot be linked (got {l:?})"),
                    })
                }
                (0, _) => Vec::new(),
                (_, Some(l)) => l,
                (_, None) => (0..n_in).collect(),
            };
            if t > 0 {
                let prev = &tables[out.last().map(|s: &ProgramStep| s.circuit).expect("t > 0")];
                let outs = prev.output_leaf();
                let mut seen = vec![false; outs.len()];
                if link.len() != n_in || outs.len() != n_in {
                    return Err(EngineError::Link {
                        step: t,
                        detail: format!("{} outputs feed {} inputs through a link of length {}", outs.len(), n_in, link.len()),
                    });
                }
                for (k, &j) in link.iter().enumerate() {
                    if j >= outs.len() || seen[j] {
                        return Err(EngineError::Link {
                            step: t,
                            detail: format!("link {link:?} is not a permutation"),
                        });
                    }
                    seen[j] = true;
                    let (a, b) = (prev.slot(outs[j]).dim, table.slot(table.input_leaf()[k]).dim);
                    if a != b {
                        return Err(EngineError::Link {
                            step: t,
                            detail: format!("output {j} has dimension {a}, input {k} needs {b}"),
                        });
                    }
                }
            }
            if circuits[ci].uses_classical_input() && input.is_none() {
                return Err(EngineError::MissingInput { step: t });
            }
            out.push(ProgramStep { circuit: ci, input, link });
        }
        let first = &tables[out[0].circuit];
        let dim = first.dim(first.input_leaf());
        let initial_state = match initial_state {
            Some(s) => {
                check_initial(&s, dim)?;
                s
            }
            None => zero_state(dim),
        };
        Ok(Self {
            name: name.into(),
            circuits,
            tables,
            steps: out,
            initial_state,
        })
    }

    pub fn from_doc(doc: ProgramDoc) -> Result<Self> {
        Self::from_doc_with(doc, TRACE_NONINCREASING_TOL)
    }

    /// Like [`Program::from_doc`] with a custom `Σ K†K ≤ I` tolerance.
    pub fn from_doc_with(doc: ProgramDoc, tol: f64) -> Result<Self> {
        let circuits = doc
            .circuits
            .into_iter()
            .map(|s| match s {
                CircuitSource::Doc(d) => Circuit::from_doc_with(d, tol),
                CircuitSource::Text(t) => Circuit::from_doc_with(parse_document(&t)?, tol),
            })
            .collect::<std::result::Result<Vec<_>, CircuitError>>()?;
        let steps = doc
            .steps
            .into_iter()
            .map(|s| {
                let ci = circuits
                    .iter()
                    .position(|c| c.name() == s.circuit)
                    .ok_or_else(|| EngineError::UnknownCircuit(s.circuit.clone()))?;
                Ok((ci, s.input, s.link))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(doc.name, circuits, steps, doc.initial_state)
    }

    pub fn with_initial_state(mut self, state: StateVector) -> Result<Self> {
        check_initial(&state, self.initial_state.dim())?;
        self.initial_state = state;
        Ok(self)
    }

    /// Replaces the classical inputs, one per step.
    pub fn with_inputs(mut self, inputs: &[Option<String>]) -> Result<Self> {
        for (t, step) in self.steps.iter_mut().enumerate() {
            if let Some(x) = inputs.get(t) {
                step.input = x.clone();
            }
            if self.circuits[step.circuit].uses_classical_input() && step.input.is_none() {
                return Err(EngineError::MissingInput { step: t });
            }
        }
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn circuits(&self) -> &[Circuit] {
        &self.circuits
    }

    pub fn steps(&self) -> &[ProgramStep] {
        &self.steps
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial_state
    }

    pub fn circuit(&self, step: usize) -> &Circuit {
        &self.circuits[self.steps[step].circuit]
    }

    pub fn table(&self, step: usize) -> &WireTable {
        &self.tables[self.steps[step].circuit]
    }

    /// Factor dimensions of the state after `step`.
    pub fn output_shape(&self, step: usize) -> SystemShape {
        let t = self.table(step);
        SystemShape::new(t.dims(t.output_leaf())).expect("slot dimensions are positive")
    }

    pub fn input_shape(&self, step: usize) -> SystemShape {
        let t = self.table(step);
        SystemShape::new(t.dims(t.input_leaf())).expect("slot dimensions are positive")
    }

    /// System labels of the state after `step`.
    pub fn output_systems(&self, step: usize) -> Vec<String> {
        let t = self.table(step);
        t.output_leaf().iter().map(|&s| t.slot(s).system.clone()).collect()
    }

    /// Moves the factors of the state leaving step `step - 1` into the input
    /// order of `step`. `m` may be a state (one column) or an operator.
    pub(crate) fn link_into(&self, step: usize, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        if step == 0 {
            return Ok(m.clone());
        }
        let prev = self.output_shape(step - 1);
        Ok(permute_factors(m, prev.factor_dims(), &self.steps[step].link)?)
    }
}

fn check_initial(s: &StateVector, dim: usize) -> Result<()> {
    if s.dim() != dim {
        return Err(EngineError::StateDimension { expected: dim, got: s.dim() });
    }
    if !s.is_normalized(TAU_NORM) {
        return Err(EngineError::NotNormalized(s.norm_sqr()));
    }
    Ok(())
}

/// Parses a program document, or a single circuit (JSON or DSL) as a
/// one-step program.
pub fn parse_program(text: &str) -> Result<Program> {
    parse_program_with(text, TRACE_NONINCREASING_TOL)
}

/// [`parse_program`] with a custom `Σ K†K ≤ I` tolerance.
pub fn parse_program_with(text: &str, tol: f64) -> Result<Program> {
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CircuitError::Syntax {
                line: e.line(),
                col: e.column(),
                message: e.to_string(),
            })?;
        if value.get("circuits").is_some() {
            let doc: ProgramDoc = serde_json::from_value(value).map_err(|e| EngineError::Malformed(e.to_string()))?;
            return Program::from_doc_with(doc, tol);
        }
    }
    Ok(Program::single(Circuit::from_doc_with(parse_document(text)?, tol)?))
}
