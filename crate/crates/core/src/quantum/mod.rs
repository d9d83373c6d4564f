//! Quantum theory as an operational probabilistic theory: Kraus sets,
//! density matrices, coarse-graining, the Born rule and unitary dilation.

mod dilation;

use thiserror::Error;

use crate::circuit::Event;
use crate::linalg::{
    hermitian_eigen, singular_values, ComplexMatrix, LinalgError, StateVector, SystemShape, C64, TAU_NUM,
};

pub use dilation::{complete_with_discard, dilate, Dilation, DISCARD_OUTCOME};

/// Rejection threshold for `σ_max(Σ K†K) > 1 + tol`.
pub const TRACE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("a Kraus set needs at least one operator")]
    Empty,
    #[error("Kraus operator {index} is {got:?}, expected {expected:?}")]
    ShapeMismatch {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("{labels} outcome labels for {ops} operators")]
    LabelCount { labels: usize, ops: usize },
    #[error("not trace non-increasing: σ_max(ΣK†K) exceeds 1 by {0:.3e}")]
    TraceIncreasing(f64),
    #[error("expected an atomic transformation, got {0} Kraus operators")]
    NotAtomic(usize),
    #[error("test is not deterministic: ‖I − ΣK†K‖ = {0:.3e}")]
    NotDeterministic(f64),
    #[error("input system must be trivial, has dimension {0}")]
    NontrivialInput(usize),
    #[error("dilation needs square Kraus operators, got {0}×{1}")]
    NotSquare(usize, usize),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
}

pub type Result<T> = std::result::Result<T, QuantumError>;

/// A test's Kraus operators, one per outcome, sharing an input and output
/// dimension. Trace non-increasing by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    input_dim: usize,
    output_dim: usize,
    operators: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl KrausSet {
    /// Operators labelled `"0"`, `"1"`, ….
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self> {
        let labels = (0..operators.len()).map(|i| i.to_string()).collect();
        Self::with_labels(operators, labels)
    }

    pub fn with_labels(operators: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        Self::with_tolerance(operators, labels, TRACE_TOL)
    }

    pub fn with_tolerance(operators: Vec<ComplexMatrix>, labels: Vec<String>, tol: f64) -> Result<Self> {
        let first = operators.first().ok_or(QuantumError::Empty)?;
        let expected = first.shape();
        if labels.len() != operators.len() {
            return Err(QuantumError::LabelCount {
                labels: labels.len(),
                ops: operators.len(),
            });
        }
        for (index, k) in operators.iter().enumerate() {
            if k.shape() != expected {
                return Err(QuantumError::ShapeMismatch {
                    index,
                    expected,
                    got: k.shape(),
                });
            }
        }
        let gram = ComplexMatrix::gram_sum(&operators).expect("nonempty");
        let smax = singular_values(&gram).first().copied().unwrap_or(0.0);
        if smax > 1.0 + tol {
            return Err(QuantumError::TraceIncreasing(smax - 1.0));
        }
        Ok(Self {
            input_dim: expected.1,
            output_dim: expected.0,
            operators,
            labels,
        })
    }

    pub fn atomic(op: ComplexMatrix) -> Result<Self> {
        Self::new(vec![op])
    }

    /// Every Kraus operator of every event, labelled by outcome (suffixed
    /// with `#j` when an event carries several operators).
    pub fn from_events(events: &[Event]) -> Result<Self> {
        let mut ops = Vec::new();
        let mut labels = Vec::new();
        for e in events {
            for (j, k) in e.kraus.iter().enumerate() {
                ops.push(k.clone());
                labels.push(if e.kraus.len() == 1 {
                    e.outcome.clone()
                } else {
                    format!("{}#{j}", e.outcome)
                });
            }
        }
        Self::with_labels(ops, labels)
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::atomic(u)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn is_atomic(&self) -> bool {
        self.operators.len() == 1
    }

    /// `‖I − Σ K†K‖_max`; zero for a deterministic test.
    pub fn completeness_defect(&self) -> f64 {
        let gram = ComplexMatrix::gram_sum(&self.operators).expect("nonempty");
        gram.max_abs_diff(&ComplexMatrix::identity(self.input_dim))
    }

    pub fn is_deterministic(&self, tol: f64) -> bool {
        self.completeness_defect() <= tol
    }

    /// Sequential composition: `self` first, then `next`. Outcomes are
    /// pairs, labelled `"a,b"`, with operators `K_b K_a`.
    pub fn then(&self, next: &KrausSet) -> Result<KrausSet> {
        if next.input_dim != self.output_dim {
            return Err(LinalgError::DimensionMismatch(format!(
                "sequential composition {}→{} then {}→{}",
                self.input_dim, self.output_dim, next.input_dim, next.output_dim
            ))
            .into());
        }
        let mut ops = Vec::with_capacity(self.len() * next.len());
        let mut labels = Vec::with_capacity(ops.capacity());
        for (ka, la) in self.operators.iter().zip(&self.labels) {
            for (kb, lb) in next.operators.iter().zip(&next.labels) {
                ops.push(kb.matmul(ka)?);
                labels.push(format!("{la},{lb}"));
            }
        }
        Self::with_labels(ops, labels)
    }

    /// Parallel composition `self ⊗ other`.
    pub fn tensor(&self, other: &KrausSet) -> Result<KrausSet> {
        let mut ops = Vec::with_capacity(self.len() * other.len());
        let mut labels = Vec::with_capacity(ops.capacity());
        for (ka, la) in self.operators.iter().zip(&self.labels) {
            for (kb, lb) in other.operators.iter().zip(&other.labels) {
                ops.push(ka.kron(kb));
                labels.push(format!("{la},{lb}"));
            }
        }
        Self::with_labels(ops, labels)
    }

    /// The atomic event for outcome `i`.
    pub fn event(&self, i: usize) -> KrausSet {
        KrausSet {
            input_dim: self.input_dim,
            output_dim: self.output_dim,
            operators: vec![self.operators[i].clone()],
            labels: vec![self.labels[i].clone()],
        }
    }
}

/// `ρ ↦ Σ K ρ K†`.
#[derive(Clone, Debug, PartialEq)]
pub struct CpMap {
    kraus: Vec<ComplexMatrix>,
    input_dim: usize,
    output_dim: usize,
}

impl CpMap {
    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.shape() != (self.input_dim, self.input_dim) {
            return Err(LinalgError::DimensionMismatch(format!(
                "map on dimension {} applied to {}×{}",
                self.input_dim,
                rho.rows(),
                rho.cols()
            ))
            .into());
        }
        let mut out = ComplexMatrix::zeros(self.output_dim, self.output_dim);
        for k in &self.kraus {
            out = out.add(&k.matmul(rho)?.matmul(&k.adjoint())?)?;
        }
        Ok(out)
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        ComplexMatrix::gram_sum(&self.kraus)
            .map(|g| g.max_abs_diff(&ComplexMatrix::identity(self.input_dim)) <= tol)
            .unwrap_or(false)
    }
}

/// Coarse-graining of a test: the sum of all its atomic events.
pub fn epistemic_of(test: &KrausSet) -> CpMap {
    CpMap {
        kraus: test.operators.clone(),
        input_dim: test.input_dim,
        output_dim: test.output_dim,
    }
}

/// `Kψ` without renormalization; `‖Kψ‖²` is the outcome weight.
pub fn apply_atomic(k: &KrausSet, psi: &StateVector) -> Result<StateVector> {
    if !k.is_atomic() {
        return Err(QuantumError::NotAtomic(k.len()));
    }
    Ok(k.operators[0].apply(psi)?)
}

/// Probability `Tr Σ K K†` of a preparation event (trivial input).
pub fn born_probability(prep: &KrausSet) -> Result<f64> {
    if prep.input_dim != 1 {
        return Err(QuantumError::NontrivialInput(prep.input_dim));
    }
    Ok(prep
        .operators
        .iter()
        .map(|k| k.data().iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum())
}

/// Classical capacity bound in bits: `log₂ dim`.
pub fn holevo_limit(shape: &SystemShape) -> f64 {
    (shape.dim() as f64).log2()
}

/// A validated density matrix: Hermitian, positive, trace at most one.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(transparent)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, TAU_NUM)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(QuantumError::InvalidDensity(format!(
                "{}×{} is not square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_hermitian(tol) {
            return Err(QuantumError::InvalidDensity("not Hermitian".into()));
        }
        let (vals, _) = hermitian_eigen(&matrix)?;
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(QuantumError::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
        }
        let tr = matrix.trace().re;
        if tr > 1.0 + tol {
            return Err(QuantumError::InvalidDensity(format!("trace {tr} exceeds 1")));
        }
        Ok(Self { matrix })
    }

    pub fn pure(psi: &StateVector) -> Self {
        Self { matrix: psi.density() }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ.
        self.matrix.data().iter().map(|z| z.norm_sqr()).sum()
    }
}
