//! Dense complex linear algebra over finite-dimensional composite systems.
//!
//! Matrices are stored row-major. A composite system is described by a
//! [`SystemShape`], the ordered list of local dimensions; flat indices follow
//! the usual Kronecker convention where the first factor is the most
//! significant digit.

mod decomp;
mod matrix;
mod serde_impl;
mod shape;
mod state;

pub use decomp::{
    bloch_coordinates, hermitian_eigen, is_contraction, is_positive_semidefinite,
    partial_trace, reduced_density, schmidt_decompose, singular_values, trace_distance,
    ContractionReport, SchmidtDecomposition,
};
pub use matrix::{tensor_product, tensor_product_capped, ComplexMatrix};
pub use shape::{permute_factors, SystemShape};
pub use state::StateVector;

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Tolerance for algebraic identities.
pub const TAU_NUM: f64 = 1e-10;
/// Tolerance for the normalization of ontic state vectors.
pub const TAU_NORM: f64 = 1e-9;
/// Singular values at or below this count as zero when computing a Schmidt rank.
pub const TAU_RANK: f64 = 1e-8;
/// Default cap on any operator or state dimension (twelve qubits).
pub const DEFAULT_MAX_DIM: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    BadLength {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix and vector dimensions must be positive")]
    EmptyDimension,
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("result dimension {dim} exceeds the configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("factor index {index} out of range for {factors} factors")]
    FactorOutOfRange { index: usize, factors: usize },
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("expected a bipartition, got {0} factors")]
    NotBipartite(usize),
    #[error("expected a qubit state, got dimension {0}")]
    NotQubit(usize),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("malformed matrix encoding: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;
