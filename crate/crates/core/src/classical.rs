//! Classical theory as an operational probabilistic theory.
//!
//! States are column vectors of sub-normalized probabilities; transformations
//! are substochastic Markov matrices acting by left multiplication, so every
//! column sums to at most one.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{ComplexMatrix, StateVector, C64, TAU_NUM};
use crate::quantum::DensityMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassicalError {
    #[error("probability entry {index} is {value}, expected a finite nonnegative number")]
    BadEntry { index: usize, value: f64 },
    #[error("total probability {0} exceeds 1")]
    Overnormalized(f64),
    #[error("column {column} sums to {sum}, exceeding 1")]
    ColumnSum { column: usize, sum: f64 },
    #[error("expected {expected} entries, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("dimension mismatch: matrix has {cols} columns, state has {dim} entries")]
    DimensionMismatch { cols: usize, dim: usize },
    #[error("basis is not orthonormal (deviation {0:.3e})")]
    NotOrthonormal(f64),
    #[error("basis has {got} vectors for dimension {dim}")]
    IncompleteBasis { dim: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, ClassicalError>;

fn check_entries(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite() || *v < 0.0) {
        Some(index) => Err(ClassicalError::BadEntry {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// A point of the sub-normalized probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ClassicalState {
    probabilities: Vec<f64>,
}

impl ClassicalState {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        check_entries(&probabilities)?;
        let total: f64 = probabilities.iter().sum();
        if total > 1.0 + TAU_NUM {
            return Err(ClassicalError::Overnormalized(total));
        }
        Ok(Self { probabilities })
    }

    pub fn point(dim: usize, i: usize) -> Self {
        let mut p = vec![0.0; dim];
        p[i] = 1.0;
        Self { probabilities: p }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn dim(&self) -> usize {
        self.probabilities.len()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn is_deterministic(&self, tol: f64) -> bool {
        (self.total() - 1.0).abs() <= tol
    }
}

impl<'de> Deserialize<'de> for ClassicalState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Self::new(Vec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// A substochastic Markov matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MarkovMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(rows, cols, data, TAU_NUM)
    }

    pub fn with_tolerance(rows: usize, cols: usize, data: Vec<f64>, tol: f64) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(ClassicalError::BadLength {
                expected: rows * cols,
                got: data.len(),
            });
        }
        check_entries(&data)?;
        let m = Self { rows, cols, data };
        for (column, sum) in m.column_sums().into_iter().enumerate() {
            if sum > 1.0 + tol {
                return Err(ClassicalError::ColumnSum { column, sum });
            }
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        Self::permutation(&(0..n).collect::<Vec<_>>())
    }

    /// Sends outcome `j` to `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut data = vec![0.0; n * n];
        for (j, &i) in perm.iter().enumerate() {
            data[i * n + j] = 1.0;
        }
        Self { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c)).sum())
            .collect()
    }

    pub fn is_deterministic(&self, tol: f64) -> bool {
        self.column_sums().iter().all(|s| (s - 1.0).abs() <= tol)
    }

    /// Square 0/1 matrix with exactly one 1 in every row and column.
    pub fn is_permutation(&self) -> bool {
        self.rows == self.cols
            && self.data.iter().all(|&v| v == 0.0 || v == 1.0)
            && (0..self.rows).all(|r| (0..self.cols).map(|c| self.get(r, c)).sum::<f64>() == 1.0)
            && self.column_sums().iter().all(|&s| s == 1.0)
    }

    /// `next · self`: apply `self`, then `next`.
    pub fn then(&self, next: &MarkovMatrix) -> Result<MarkovMatrix> {
        if next.cols != self.rows {
            return Err(ClassicalError::DimensionMismatch {
                cols: next.cols,
                dim: self.rows,
            });
        }
        let data = (0..next.rows)
            .flat_map(|r| {
                (0..self.cols).map(move |c| (0..self.rows).map(|k| next.get(r, k) * self.get(k, c)).sum())
            })
            .collect();
        Self::new(next.rows, self.cols, data)
    }

    /// The inverse when it exists and is itself substochastic.
    pub fn markov_inverse(&self) -> Option<MarkovMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let inv = DMatrix::from_row_slice(self.rows, self.cols, &self.data).try_inverse()?;
        let data: Vec<f64> = (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .map(|(r, c)| inv[(r, c)])
            .map(|v| if v.abs() < 1e-12 { 0.0 } else { v })
            .collect();
        Self::new(self.rows, self.cols, data).ok()
    }
}

impl Serialize for MarkovMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = self.data.chunks(self.cols).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MarkovMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged Markov matrix"));
        }
        Self::new(rows.len(), cols, rows.concat()).map_err(serde::de::Error::custom)
    }
}

/// `M x`.
pub fn apply_markov(m: &MarkovMatrix, x: &ClassicalState) -> Result<ClassicalState> {
    if m.cols != x.dim() {
        return Err(ClassicalError::DimensionMismatch {
            cols: m.cols,
            dim: x.dim(),
        });
    }
    let p = (0..m.rows)
        .map(|r| (0..m.cols).map(|c| m.get(r, c) * x.probabilities[c]).sum())
        .collect();
    // Rounding can push the total a hair above one; accept what the inputs allow.
    Ok(ClassicalState { probabilities: p })
}

/// Diagonal of `ρ` in an orthonormal basis: `⟨b_i|ρ|b_i⟩`.
pub fn dephase(rho: &DensityMatrix, basis: &[StateVector]) -> Result<ClassicalState> {
    let d = rho.dim();
    if basis.len() != d || basis.iter().any(|b| b.dim() != d) {
        return Err(ClassicalError::IncompleteBasis { dim: d, got: basis.len() });
    }
    let mut worst: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.inner(b) - C64::new(want, 0.0)).norm());
        }
    }
    if worst > 1e-9 {
        return Err(ClassicalError::NotOrthonormal(worst));
    }
    let m = rho.matrix();
    let p = basis
        .iter()
        .map(|b| {
            let mb = m.apply(b).expect("dimensions checked");
            b.inner(&mb).re.max(0.0)
        })
        .collect();
    Ok(ClassicalState { probabilities: p })
}

/// Computational-basis dephasing.
pub fn dephase_computational(rho: &DensityMatrix) -> ClassicalState {
    let m = rho.matrix();
    ClassicalState {
        probabilities: (0..rho.dim()).map(|i| m[(i, i)].re.max(0.0)).collect(),
    }
}

/// `diag(x)`.
pub fn embed_classical(x: &ClassicalState) -> DensityMatrix {
    DensityMatrix::new(ComplexMatrix::diagonal(&x.probabilities)).expect("diagonal of a sub-normalized state")
}

/// Random substochastic matrix: each column is a uniform point of the
/// simplex scaled by a mass in `[0.5, 1]`.
pub fn random_markov<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> MarkovMatrix {
    let mut data = vec![0.0; rows * cols];
    for c in 0..cols {
        let w: Vec<f64> = (0..rows).map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
        let mass = 0.5 + 0.5 * rng.random::<f64>();
        let total: f64 = w.iter().sum();
        for r in 0..rows {
            data[r * cols + c] = mass * w[r] / total;
        }
    }
    MarkovMatrix::new(rows, cols, data).expect("columns sum to at most one")
}

/// Exhaustive search over `dim × dim` substochastic matrices with entries in
/// `{0, ½, 1}` for those with a substochastic inverse.
pub fn invertible_markov_search(dim: usize) -> Vec<MarkovMatrix> {
    const GRID: [f64; 3] = [0.0, 0.5, 1.0];
    // All admissible columns.
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let total = GRID.len().pow(dim as u32);
    for code in 0..total {
        let mut c = code;
        let col: Vec<f64> = (0..dim)
            .map(|_| {
                let v = GRID[c % GRID.len()];
                c /= GRID.len();
                v
            })
            .collect();
        if col.iter().sum::<f64>() <= 1.0 {
            columns.push(col);
        }
    }
    let mut found = Vec::new();
    let mut idx = vec![0usize; dim];
    'outer: loop {
        let data: Vec<f64> = (0..dim)
            .flat_map(|r| idx.iter().map(|&k| columns[k][r]).collect::<Vec<_>>())
            .collect();
        let m = MarkovMatrix { rows: dim, cols: dim, data };
        if m.markov_inverse().is_some() {
            found.push(m);
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < columns.len() {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    found
}
