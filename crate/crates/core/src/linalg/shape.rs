use serde::{Deserialize, Serialize};

use super::{ComplexMatrix, LinalgError, Result};

/// Local dimensions of the tensor factors of a composite system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SystemShape {
    factor_dims: Vec<usize>,
}

impl SystemShape {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.contains(&0) {
            return Err(LinalgError::EmptyDimension);
        }
        Ok(Self { factor_dims })
    }

    /// `n` qubits.
    pub fn qubits(n: usize) -> Self {
        Self {
            factor_dims: vec![2; n],
        }
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn len(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factor_dims.is_empty()
    }

    /// Total dimension; the empty shape is the trivial system of dimension 1.
    pub fn dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(LinalgError::DimensionMismatch(format!(
                "shape {:?} has dimension {}, object has {}",
                self.factor_dims,
                self.dim(),
                dim
            )));
        }
        Ok(())
    }

    /// Multi-index digits of a flat index.
    pub fn digits(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (slot, &d) in out.iter_mut().zip(&self.factor_dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        out
    }

    /// Dimension of a subset of factors.
    pub fn sub_dim(&self, factors: &[usize]) -> usize {
        factors.iter().map(|&i| self.factor_dims[i]).product()
    }
}

/// Reorders the tensor factors indexing the rows of `m`.
///
/// Factor `k` of the result is factor `perm[k]` of the input; columns are
/// carried along unchanged, so a matrix with `b` columns is treated as `b`
/// vectors at once.
pub fn permute_factors(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let n = dims.len();
    let dim: usize = dims.iter().product();
    if m.rows() != dim {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix has {} rows, factors give {}",
            m.rows(),
            dim
        )));
    }
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "permutation of length {} for {} factors",
            perm.len(),
            n
        )));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(LinalgError::FactorOutOfRange { index: p, factors: n });
        }
        seen[p] = true;
    }
    if perm.iter().enumerate().all(|(k, &p)| k == p) {
        return Ok(m.clone());
    }

    // Strides of the old layout, then of the new one.
    let mut old_stride = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        old_stride[i] = old_stride[i + 1] * dims[i + 1];
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    // For each new factor position, the stride it had in the old layout.
    let src_stride: Vec<usize> = perm.iter().map(|&p| old_stride[p]).collect();

    let cols = m.cols();
    let src = m.data();
    let mut out = Vec::with_capacity(src.len());
    let mut digits = vec![0usize; n];
    let mut src_row = 0usize;
    for _ in 0..dim {
        let start = src_row * cols;
        out.extend_from_slice(&src[start..start + cols]);
        // Odometer increment over the new layout, tracking the old row index.
        for k in (0..n).rev() {
            digits[k] += 1;
            src_row += src_stride[k];
            if digits[k] < new_dims[k] {
                break;
            }
            src_row -= src_stride[k] * new_dims[k];
            digits[k] = 0;
        }
    }
    ComplexMatrix::new(dim, cols, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::StateVector;

    #[test]
    fn digits_are_big_endian() {
        let s = SystemShape::new(vec![2, 3, 2]).unwrap();
        assert_eq!(s.digits(0), vec![0, 0, 0]);
        assert_eq!(s.digits(7), vec![1, 0, 1]);
        assert_eq!(s.digits(11), vec![1, 2, 1]);
    }

    #[test]
    fn swap_two_factors_of_product_state() {
        let a = StateVector::from_real(&[1.0, 2.0]).unwrap();
        let b = StateVector::from_real(&[3.0, 4.0, 5.0]).unwrap();
        let ab = ComplexMatrix::ket(&a.kron(&b));
        let ba = permute_factors(&ab, &[2, 3], &[1, 0]).unwrap();
        assert_eq!(ba, ComplexMatrix::ket(&b.kron(&a)));
    }

    #[test]
    fn bad_permutation_rejected() {
        let m = ComplexMatrix::identity(4);
        assert!(permute_factors(&m, &[2, 2], &[0, 0]).is_err());
        assert!(permute_factors(&m, &[2, 2], &[0]).is_err());
    }
}
