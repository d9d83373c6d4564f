//! Measurements: POVMs, SIC frames, linear-inversion tomography and the
//! store-and-recall memory benchmark.

mod memory;
mod sic;
mod tomography;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{hermitian_eigen, ComplexMatrix, LinalgError, StateVector, C64};
use crate::random::random_direction;

pub use memory::{
    benchmark_memory, recall_fidelity_bound, store_recall_cycle, to_csv, BenchRow, CovariantQubitFrame, FidelityBound,
    MemoryBenchmark, RecallStrategy, DEFAULT_MESH_POINTS,
};
pub use sic::{build_sic, SicPovm, TAU_SIC};
pub use tomography::{attention_repetition, tomography_linear, TomographyResult};

/// Tolerance on `Σ E = I` and `0 ≤ E ≤ I`.
pub const POVM_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasurementError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("a POVM needs at least one effect")]
    Empty,
    #[error("effect {index} is not a {dim}×{dim} matrix")]
    EffectShape { index: usize, dim: usize },
    #[error("effect {index} is not between 0 and I (eigenvalues in [{min:.3e}, {max:.3e}])")]
    EffectRange { index: usize, min: f64, max: f64 },
    #[error("effect {0} is not Hermitian")]
    NotHermitian(usize),
    #[error("effects do not sum to the identity (deviation {0:.3e})")]
    Incomplete(f64),
    #[error("POVM spans {span} of the {needed} dimensions needed for tomography")]
    NotInfocomplete { span: usize, needed: usize },
    #[error("SIC construction supports d = 2 and 3, not {0}")]
    UnsupportedSic(usize),
    #[error("SIC check failed: overlap deviation {0:.3e}")]
    SicCheck(f64),
    #[error("histogram has {got} bins for {effects} effects")]
    HistogramSize { got: usize, effects: usize },
    #[error("histogram is empty")]
    NoSamples,
    #[error("strategy `{strategy}` does not support dimension {dim}")]
    Unsupported { strategy: String, dim: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, MeasurementError>;

/// Positive operators summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = effects.first().ok_or(MeasurementError::Empty)?.rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for (index, e) in effects.iter().enumerate() {
            if e.shape() != (dim, dim) {
                return Err(MeasurementError::EffectShape { index, dim });
            }
            if !e.is_hermitian(POVM_TOL) {
                return Err(MeasurementError::NotHermitian(index));
            }
            let (vals, _) = hermitian_eigen(e)?;
            let (max, min) = (vals[0], vals[vals.len() - 1]);
            if min < -POVM_TOL || max > 1.0 + POVM_TOL {
                return Err(MeasurementError::EffectRange { index, min, max });
            }
            sum = sum.add(e)?;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if dev > POVM_TOL {
            return Err(MeasurementError::Incomplete(dev));
        }
        Ok(Self { dim, effects })
    }

    /// Rank-one projectors onto an orthonormal basis.
    pub fn from_basis(basis: &[StateVector]) -> Result<Self> {
        Self::new(basis.iter().map(|b| ComplexMatrix::outer(b, b)).collect())
    }

    pub fn computational(dim: usize) -> Self {
        Self::from_basis(&(0..dim).map(|i| StateVector::basis(dim, i)).collect::<Vec<_>>()).expect("basis")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    /// Born probabilities `Tr(ρ E_i)`, clipped at zero.
    pub fn probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        self.effects
            .iter()
            .map(|e| {
                let mut tr = C64::new(0.0, 0.0);
                for r in 0..self.dim {
                    for c in 0..self.dim {
                        tr += rho[(r, c)] * e[(c, r)];
                    }
                }
                tr.re.max(0.0)
            })
            .collect()
    }

    /// `|⟨ψ|E_i|ψ⟩|` for a pure state.
    pub fn pure_probabilities(&self, psi: &StateVector) -> Vec<f64> {
        self.effects
            .iter()
            .map(|e| psi.inner(&e.apply(psi).expect("dimension")).re.max(0.0))
            .collect()
    }

    /// Union of POVMs, each weighted by `1/n`.
    pub fn mixture(parts: &[Povm]) -> Result<Self> {
        let w = C64::new(1.0 / parts.len() as f64, 0.0);
        Self::new(parts.iter().flat_map(|p| p.effects.iter().map(|e| e.scale(w))).collect())
    }
}

/// Real coordinates of a Hermitian matrix in an orthonormal basis of the
/// real space of Hermitian matrices.
pub(crate) fn hermitian_coordinates(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.rows();
    let s = std::f64::consts::SQRT_2;
    let mut v = Vec::with_capacity(d * d);
    for i in 0..d {
        v.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in i + 1..d {
            v.push(s * m[(i, j)].re);
            v.push(-s * m[(i, j)].im);
        }
    }
    v
}

/// Inverse of [`hermitian_coordinates`].
pub(crate) fn from_hermitian_coordinates(d: usize, v: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = C64::new(v[i], 0.0);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = d;
    for i in 0..d {
        for j in i + 1..d {
            let z = C64::new(s * v[k], -s * v[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// Row `i` holds the real coordinates of effect `i`.
pub(crate) fn frame_matrix(p: &Povm) -> DMatrix<f64> {
    let d2 = p.dim * p.dim;
    let rows: Vec<Vec<f64>> = p.effects.iter().map(hermitian_coordinates).collect();
    DMatrix::from_fn(p.len(), d2, |r, c| rows[r][c])
}

/// Whether the effects span the `d²`-dimensional real space of Hermitian
/// operators, with the dimension of their span.
pub fn is_infocomplete(p: &Povm) -> (bool, usize) {
    let m = frame_matrix(p);
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0, f64::max);
    let span = sv.iter().filter(|&&s| s > 1e-9 * top.max(1.0)).count();
    (span == p.dim * p.dim, span)
}

/// Two rank-one projectors `(I ± n·σ)/2` along a Bloch direction.
pub fn von_neumann_along(n: [f64; 3]) -> Povm {
    let plus = |s: f64| {
        let mut m = ComplexMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(0.5 * (1.0 + s * n[2]), 0.0);
        m[(1, 1)] = C64::new(0.5 * (1.0 - s * n[2]), 0.0);
        m[(0, 1)] = C64::new(0.5 * s * n[0], -0.5 * s * n[1]);
        m[(1, 0)] = C64::new(0.5 * s * n[0], 0.5 * s * n[1]);
        m
    };
    Povm {
        dim: 2,
        effects: vec![plus(1.0), plus(-1.0)],
    }
}

/// Von Neumann measurement along a uniformly random Bloch direction.
pub fn random_vn_qubit<R: Rng + ?Sized>(rng: &mut R) -> Povm {
    von_neumann_along(random_direction(rng))
}

/// Outcome counts, one bin per effect.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

impl Serialize for Histogram {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: IndexMap<String, u64> = self.counts.iter().enumerate().map(|(i, &c)| (i.to_string(), c)).collect();
        map.serialize(s)
    }
}

/// Draws `n` outcomes from the Born distribution `Tr(ρE_i)` (multinomial by
/// successive binomials).
pub fn simulate_measurement<R: Rng + ?Sized>(p: &Povm, rho: &ComplexMatrix, n: u64, rng: &mut R) -> Histogram {
    sample_counts(&p.probabilities(rho), n, rng)
}

pub(crate) fn sample_counts<R: Rng + ?Sized>(probs: &[f64], n: u64, rng: &mut R) -> Histogram {
    let total: f64 = probs.iter().sum();
    let mut left = n;
    let mut mass = total;
    let mut counts = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        if i + 1 == probs.len() {
            counts.push(left);
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if left == 0 || q == 0.0 {
            0
        } else {
            Binomial::new(left, q).expect("probability in [0, 1]").sample(rng)
        };
        counts.push(k);
        left -= k;
        mass -= p;
    }
    Histogram { counts }
}

/// One outcome index drawn from unnormalized weights.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

#[cfg(test)]
mod tests;
