use super::{KrausSet, QuantumError, Result};
use crate::linalg::{hermitian_eigen, partial_trace, ComplexMatrix, StateVector, SystemShape, C64};

pub const DISCARD_OUTCOME: &str = "discard";

/// Unitary realization of a deterministic test: system ⊗ ancilla, the
/// ancilla prepared in `|0⟩` and read out by `projectors`.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub unitary: ComplexMatrix,
    pub ancilla: StateVector,
    pub projectors: Vec<ComplexMatrix>,
    pub system_dim: usize,
}

impl Dilation {
    pub fn ancilla_dim(&self) -> usize {
        self.ancilla.dim()
    }

    /// `Tr_E[U(ρ⊗σ)U†(I⊗P_i)]`.
    pub fn branch(&self, rho: &ComplexMatrix, i: usize) -> Result<ComplexMatrix> {
        let sigma = self.ancilla.density();
        let joint = self
            .unitary
            .matmul(&rho.kron(&sigma))?
            .matmul(&self.unitary.adjoint())?;
        let readout = ComplexMatrix::identity(self.system_dim).kron(&self.projectors[i]);
        let shape = SystemShape::new(vec![self.system_dim, self.ancilla_dim()])?;
        Ok(partial_trace(&joint.matmul(&readout)?, &shape, &[0])?)
    }
}

/// Adds a `discard` outcome `√(I − ΣK†K)` when the test leaks probability.
/// Deterministic tests (defect ≤ `tol`) are returned unchanged.
pub fn complete_with_discard(k: &KrausSet, tol: f64) -> Result<KrausSet> {
    if k.is_deterministic(tol) {
        return Ok(k.clone());
    }
    if k.input_dim != k.output_dim {
        return Err(QuantumError::NotSquare(k.output_dim, k.input_dim));
    }
    let gram = ComplexMatrix::gram_sum(&k.operators).expect("nonempty");
    let rest = ComplexMatrix::identity(k.input_dim).sub(&gram)?;
    let (vals, vecs) = hermitian_eigen(&rest)?;
    let mut root = ComplexMatrix::zeros(k.input_dim, k.input_dim);
    for (v, u) in vals.iter().zip(&vecs) {
        let s = v.max(0.0).sqrt();
        root = root.add(&ComplexMatrix::outer(u, u).scale(C64::new(s, 0.0)))?;
    }
    let mut ops = k.operators.clone();
    let mut labels = k.labels.clone();
    ops.push(root);
    labels.push(DISCARD_OUTCOME.to_string());
    KrausSet::with_labels(ops, labels)
}

/// Realizes a deterministic test with square Kraus operators as a unitary
/// interaction with an ancilla of dimension equal to the outcome count.
///
/// The isometry `V = Σ K_i ⊗ |i⟩` fills the columns `|b⟩⊗|0⟩`; the rest of
/// the unitary is completed by Gram–Schmidt over the standard basis, so the
/// result is deterministic.
pub fn dilate(k: &KrausSet, tol: f64) -> Result<Dilation> {
    let d = k.input_dim;
    if k.output_dim != d {
        return Err(QuantumError::NotSquare(k.output_dim, d));
    }
    let defect = k.completeness_defect();
    if defect > tol {
        return Err(QuantumError::NotDeterministic(defect));
    }
    let n = k.len();
    let big = d * n;
    let mut cols: Vec<Option<Vec<C64>>> = vec![None; big];
    for b in 0..d {
        let mut col = vec![C64::new(0.0, 0.0); big];
        for (i, op) in k.operators.iter().enumerate() {
            for a in 0..d {
                col[a * n + i] = op[(a, b)];
            }
        }
        cols[b * n] = Some(col);
    }
    let mut basis: Vec<Vec<C64>> = cols.iter().flatten().cloned().collect();
    let threshold = 1.0 / (2.0 * big as f64).sqrt();
    let mut candidate = 0;
    for slot in cols.iter_mut().filter(|c| c.is_none()) {
        loop {
            let mut v = vec![C64::new(0.0, 0.0); big];
            v[candidate] = C64::new(1.0, 0.0);
            candidate += 1;
            // Two passes keep the completion orthonormal to working precision.
            for _ in 0..2 {
                for q in &basis {
                    let overlap: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= overlap * qi;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > threshold {
                let v: Vec<C64> = v.into_iter().map(|z| z / norm).collect();
                basis.push(v.clone());
                *slot = Some(v);
                break;
            }
        }
    }
    let cols: Vec<Vec<C64>> = cols.into_iter().map(|c| c.expect("completed")).collect();
    let unitary = ComplexMatrix::from_fn(big, big, |r, c| cols[c][r]);
    let projectors = (0..n)
        .map(|i| {
            let e = StateVector::basis(n, i);
            ComplexMatrix::outer(&e, &e)
        })
        .collect();
    Ok(Dilation {
        unitary,
        ancilla: StateVector::basis(n, 0),
        projectors,
        system_dim: d,
    })
}
