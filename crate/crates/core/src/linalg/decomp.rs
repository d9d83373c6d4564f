use nalgebra::{DMatrix, SymmetricEigen};

use super::{ComplexMatrix, LinalgError, Result, StateVector, SystemShape, C64, TAU_NORM, TAU_NUM, TAU_RANK};

/// Kept and traced flat sub-indices for every flat index of `shape`.
fn split_indices(shape: &SystemShape, keep: &[usize]) -> (Vec<usize>, Vec<usize>, usize, usize) {
    let dims = shape.factor_dims();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let keep_dim = shape.sub_dim(keep);
    let traced_dim = shape.sub_dim(&traced);
    let mut kidx = Vec::with_capacity(shape.dim());
    let mut tidx = Vec::with_capacity(shape.dim());
    for flat in 0..shape.dim() {
        let digits = shape.digits(flat);
        let k = keep.iter().fold(0, |acc, &f| acc * dims[f] + digits[f]);
        let t = traced.iter().fold(0, |acc, &f| acc * dims[f] + digits[f]);
        kidx.push(k);
        tidx.push(t);
    }
    (kidx, tidx, keep_dim, traced_dim)
}

fn normalize_keep(shape: &SystemShape, keep: &[usize]) -> Result<Vec<usize>> {
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&k| k >= shape.len()) {
        return Err(LinalgError::FactorOutOfRange {
            index: bad,
            factors: shape.len(),
        });
    }
    Ok(keep)
}

/// Traces out every factor not listed in `keep`. Kept factors stay in their
/// original order regardless of the order of `keep`.
pub fn partial_trace(rho: &ComplexMatrix, shape: &SystemShape, keep: &[usize]) -> Result<ComplexMatrix> {
    if !rho.is_square() {
        return Err(LinalgError::NotSquare(rho.rows(), rho.cols()));
    }
    shape.check_dim(rho.rows())?;
    let keep = normalize_keep(shape, keep)?;
    let (kidx, tidx, keep_dim, _) = split_indices(shape, &keep);
    let n = rho.rows();
    let mut out = ComplexMatrix::zeros(keep_dim, keep_dim);
    for r in 0..n {
        let row = rho.row_slice(r);
        for c in 0..n {
            if tidx[r] == tidx[c] {
                out[(kidx[r], kidx[c])] += row[c];
            }
        }
    }
    Ok(out)
}

/// Reduced density matrix of a pure state on the `keep` factors, computed
/// from the amplitudes without forming `|ψ⟩⟨ψ|`.
pub fn reduced_density(psi: &StateVector, shape: &SystemShape, keep: &[usize]) -> Result<ComplexMatrix> {
    shape.check_dim(psi.dim())?;
    let keep = normalize_keep(shape, keep)?;
    let (kidx, tidx, keep_dim, traced_dim) = split_indices(shape, &keep);
    // Amplitudes reshaped as a keep_dim x traced_dim matrix.
    let mut amat = vec![C64::new(0.0, 0.0); keep_dim * traced_dim];
    for (flat, z) in psi.amplitudes().iter().enumerate() {
        amat[kidx[flat] * traced_dim + tidx[flat]] = *z;
    }
    let mut out = ComplexMatrix::zeros(keep_dim, keep_dim);
    for i in 0..keep_dim {
        let ri = &amat[i * traced_dim..(i + 1) * traced_dim];
        for j in i..keep_dim {
            let rj = &amat[j * traced_dim..(j + 1) * traced_dim];
            let v: C64 = ri.iter().zip(rj).map(|(a, b)| a * b.conj()).sum();
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    Ok(out)
}

/// Schmidt decomposition `ψ = Σᵢ λᵢ |lᵢ⟩|rᵢ⟩` with `λ` in descending order.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub left: Vec<StateVector>,
    pub right: Vec<StateVector>,
}

impl SchmidtDecomposition {
    /// Number of coefficients above [`TAU_RANK`].
    pub fn rank(&self) -> usize {
        self.rank_with(TAU_RANK)
    }

    pub fn rank_with(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    pub fn reconstruct(&self) -> StateVector {
        let dim = self.left[0].dim() * self.right[0].dim();
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        for ((c, l), r) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            for (a, z) in amps.iter_mut().zip(l.kron(r).amplitudes()) {
                *a += z * *c;
            }
        }
        StateVector::new(amps).expect("finite reconstruction")
    }
}

pub fn schmidt_decompose(psi: &StateVector, shape: &SystemShape) -> Result<SchmidtDecomposition> {
    if shape.len() != 2 {
        return Err(LinalgError::NotBipartite(shape.len()));
    }
    shape.check_dim(psi.dim())?;
    if !psi.is_normalized(TAU_NORM) {
        return Err(LinalgError::NotNormalized(psi.norm()));
    }
    let (da, db) = (shape.factor_dims()[0], shape.factor_dims()[1]);
    let m = DMatrix::from_row_slice(da, db, psi.amplitudes());
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut coefficients = Vec::with_capacity(order.len());
    let mut left = Vec::with_capacity(order.len());
    let mut right = Vec::with_capacity(order.len());
    for i in order {
        coefficients.push(svd.singular_values[i]);
        left.push(StateVector::new(u.column(i).iter().copied().collect())?);
        right.push(StateVector::new(v_t.row(i).iter().copied().collect())?);
    }
    Ok(SchmidtDecomposition {
        coefficients,
        left,
        right,
    })
}

/// Singular values in descending order.
pub fn singular_values(x: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = x.to_nalgebra().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues in descending
/// order and the matching eigenvectors.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, Vec<StateVector>)> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare(m.rows(), m.cols()));
    }
    // Symmetrize so round-off asymmetry cannot leak into the solver.
    let h = m.add(&m.adjoint())?.scale(C64::new(0.5, 0.0));
    let eig = SymmetricEigen::new(h.to_nalgebra());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| StateVector::new(eig.eigenvectors.column(i).iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok((values, vectors))
}

/// `m ≥ 0` with eigenvalue floor `-tol`. Non-Hermitian input is rejected.
pub fn is_positive_semidefinite(m: &ComplexMatrix, tol: f64) -> bool {
    if !m.is_hermitian(tol.max(TAU_NUM)) {
        return false;
    }
    match hermitian_eigen(m) {
        Ok((values, _)) => values.last().is_none_or(|&v| v >= -tol),
        Err(_) => false,
    }
}

/// `½ Σ |eig(ρ - σ)|`.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let diff = rho.sub(sigma)?;
    let (values, _) = hermitian_eigen(&diff)?;
    Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionReport {
    pub is_contraction: bool,
    pub sigma_max: f64,
}

/// Checks `‖X‖ ≤ 1` both through the largest singular value and through
/// `I - X†X ≥ 0`; both must agree for a positive verdict.
pub fn is_contraction(x: &ComplexMatrix) -> ContractionReport {
    let sigma_max = singular_values(x).first().copied().unwrap_or(0.0);
    let gram = x.adjoint().matmul(x).expect("X†X is always conformable");
    let slack = ComplexMatrix::identity(x.cols())
        .sub(&gram)
        .expect("same shape");
    let psd = is_positive_semidefinite(&slack, TAU_NUM);
    ContractionReport {
        is_contraction: sigma_max <= 1.0 + TAU_NUM && psd,
        sigma_max,
    }
}

/// `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)` of a normalized qubit state.
pub fn bloch_coordinates(psi: &StateVector) -> Result<[f64; 3]> {
    if psi.dim() != 2 {
        return Err(LinalgError::NotQubit(psi.dim()));
    }
    if !psi.is_normalized(TAU_NORM) {
        return Err(LinalgError::NotNormalized(psi.norm()));
    }
    let a = psi.amplitudes()[0];
    let b = psi.amplitudes()[1];
    let ab = a.conj() * b;
    Ok([2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr()])
}
