use crate::circuit::Circuit;
use crate::linalg::{permute_factors, ComplexMatrix, C64};

use super::{EngineError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlotKind {
    /// A dangling input port of the circuit.
    OpenInput,
    /// Wire index in the circuit document.
    Wire(usize),
    /// A dangling output port of the circuit.
    OpenOutput,
}

/// One system-carrying edge: a wire or a dangling port.
#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    pub kind: SlotKind,
    pub system: String,
    pub dim: usize,
    pub producer: Option<(usize, usize)>,
    pub consumer: Option<(usize, usize)>,
}

/// Every edge of a circuit in canonical order: open inputs by consumer
/// `(node, port)`, then everything else by producer `(node, port)`. Leaves
/// list their slots in this order.
#[derive(Clone, Debug)]
pub struct WireTable {
    slots: Vec<Slot>,
    input_slot: Vec<Vec<usize>>,
    output_slot: Vec<Vec<usize>>,
    inputs: Vec<usize>,
    outputs: Vec<usize>,
}

impl WireTable {
    pub fn new(c: &Circuit) -> Self {
        let mut slots = Vec::new();
        for (n, p) in c.open_inputs() {
            slots.push(Slot {
                kind: SlotKind::OpenInput,
                system: c.node(n).inputs[p].clone(),
                dim: c.input_dims(n)[p],
                producer: None,
                consumer: Some((n, p)),
            });
        }
        for n in 0..c.node_count() {
            for (p, &dim) in c.output_dims(n).iter().enumerate() {
                let (kind, consumer) = match c.output_wire(n, p) {
                    Some(w) => {
                        let to = &c.wires()[w].to;
                        (SlotKind::Wire(w), Some((c.node_index(&to.0).expect("validated"), to.1)))
                    }
                    None => (SlotKind::OpenOutput, None),
                };
                slots.push(Slot {
                    kind,
                    system: c.node(n).outputs[p].clone(),
                    dim,
                    producer: Some((n, p)),
                    consumer,
                });
            }
        }
        let mut input_slot: Vec<Vec<usize>> = (0..c.node_count()).map(|n| vec![0; c.input_dims(n).len()]).collect();
        let mut output_slot: Vec<Vec<usize>> = (0..c.node_count()).map(|n| vec![0; c.output_dims(n).len()]).collect();
        let (mut inputs, mut outputs) = (Vec::new(), Vec::new());
        for (id, s) in slots.iter().enumerate() {
            if let Some((n, p)) = s.consumer {
                input_slot[n][p] = id;
            }
            if let Some((n, p)) = s.producer {
                output_slot[n][p] = id;
            }
            match s.kind {
                SlotKind::OpenInput => inputs.push(id),
                SlotKind::OpenOutput => outputs.push(id),
                SlotKind::Wire(_) => {}
            }
        }
        Self {
            slots,
            input_slot,
            output_slot,
            inputs,
            outputs,
        }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, id: usize) -> &Slot {
        &self.slots[id]
    }

    pub fn input_slot(&self, node: usize, port: usize) -> usize {
        self.input_slot[node][port]
    }

    pub fn output_slot(&self, node: usize, port: usize) -> usize {
        self.output_slot[node][port]
    }

    pub fn node_inputs(&self, node: usize) -> &[usize] {
        &self.input_slot[node]
    }

    pub fn node_outputs(&self, node: usize) -> &[usize] {
        &self.output_slot[node]
    }

    /// The first leaf: open inputs.
    pub fn input_leaf(&self) -> &[usize] {
        &self.inputs
    }

    /// The last leaf: open outputs.
    pub fn output_leaf(&self) -> &[usize] {
        &self.outputs
    }

    pub fn dims(&self, slots: &[usize]) -> Vec<usize> {
        slots.iter().map(|&s| self.slots[s].dim).collect()
    }

    pub fn dim(&self, slots: &[usize]) -> usize {
        slots.iter().map(|&s| self.slots[s].dim).product()
    }
}

/// Live slots and a matrix whose rows are indexed by their tensor product;
/// columns are a batch (one column for a state, `d_in` for an operator).
#[derive(Clone, Debug)]
pub(crate) struct Register {
    pub slots: Vec<usize>,
    pub dims: Vec<usize>,
}

impl Register {
    pub fn new(table: &WireTable, slots: &[usize]) -> Self {
        Self {
            slots: slots.to_vec(),
            dims: table.dims(slots),
        }
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Applies `k` to the slots `inputs` (in port order). Outputs take the
    /// leading positions of the new register, followed by untouched slots.
    pub fn apply(
        &self,
        table: &WireTable,
        inputs: &[usize],
        outputs: &[usize],
        k: &ComplexMatrix,
        m: &ComplexMatrix,
        max_dim: usize,
    ) -> Result<(Register, ComplexMatrix)> {
        let mut perm = Vec::with_capacity(self.slots.len());
        for s in inputs {
            let pos = self
                .slots
                .iter()
                .position(|x| x == s)
                .ok_or_else(|| EngineError::InvalidFoliation(format!("slot {s} is not live")))?;
            perm.push(pos);
        }
        let rest: Vec<usize> = (0..self.slots.len()).filter(|i| !perm.contains(i)).collect();
        perm.extend(&rest);
        let permuted = permute_factors(m, &self.dims, &perm)?;

        let d_in = k.cols();
        let d_out = k.rows();
        let rest_dim = self.dim() / d_in;
        let new_dim = d_out * rest_dim;
        if new_dim > max_dim {
            return Err(EngineError::DimensionOverflow { dim: new_dim, max: max_dim });
        }
        let block = rest_dim * m.cols();
        let src = permuted.data();
        let mut out = vec![C64::new(0.0, 0.0); d_out * block];
        for (o, dst) in out.chunks_mut(block.max(1)).enumerate().take(d_out) {
            for i in 0..d_in {
                let a = k[(o, i)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for (d, s) in dst.iter_mut().zip(&src[i * block..(i + 1) * block]) {
                    *d += a * s;
                }
            }
        }
        let mut slots = outputs.to_vec();
        slots.extend(rest.iter().map(|&i| self.slots[i]));
        let reg = Register::new(table, &slots);
        Ok((reg, ComplexMatrix::new(new_dim, m.cols(), out)?))
    }

    /// Rows of `m` reordered so the register reads `target`.
    pub fn reorder(&self, target: &[usize], m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let perm: Vec<usize> = target
            .iter()
            .map(|s| {
                self.slots
                    .iter()
                    .position(|x| x == s)
                    .ok_or_else(|| EngineError::InvalidFoliation(format!("slot {s} is not live")))
            })
            .collect::<Result<_>>()?;
        if perm.len() != self.slots.len() {
            return Err(EngineError::InvalidFoliation("register and target differ".into()));
        }
        Ok(permute_factors(m, &self.dims, &perm)?)
    }
}
