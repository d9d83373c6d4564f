use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::linalg::{hermitian_eigen, ComplexMatrix, StateVector, C64};
use crate::quantum::DensityMatrix;

use super::{
    frame_matrix, from_hermitian_coordinates, is_infocomplete, simulate_measurement, Histogram, MeasurementError, Povm,
    Result,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomographyResult {
    /// Positive, trace-one estimate.
    pub estimate: DensityMatrix,
    pub sample_count: u64,
    /// `‖A r − f‖₂` of the unconstrained least-squares fit.
    pub residual: f64,
}

/// Least-squares inversion of the observed frequencies onto the effect
/// frame, followed by eigenvalue clipping and renormalization.
pub fn tomography_linear(p: &Povm, histogram: &Histogram) -> Result<TomographyResult> {
    let (complete, span) = is_infocomplete(p);
    let d = p.dim();
    if !complete {
        return Err(MeasurementError::NotInfocomplete { span, needed: d * d });
    }
    if histogram.counts.len() != p.len() {
        return Err(MeasurementError::HistogramSize {
            got: histogram.counts.len(),
            effects: p.len(),
        });
    }
    let n = histogram.total();
    if n == 0 {
        return Err(MeasurementError::NoSamples);
    }
    let f = DVector::from_vec(histogram.frequencies());
    let (raw, residual) = invert(p, &f)?;
    Ok(TomographyResult {
        estimate: project(&raw)?,
        sample_count: n,
        residual,
    })
}

/// Unconstrained Hermitian `ρ` with `Tr(ρE_i) ≈ f_i`.
pub(crate) fn invert(p: &Povm, f: &DVector<f64>) -> Result<(ComplexMatrix, f64)> {
    let a = frame_matrix(p);
    let svd = a.clone().svd(true, true);
    let r = svd
        .solve(f, 1e-12)
        .map_err(|e| MeasurementError::Parameter(e.to_string()))?;
    let residual = (&a * &r - f).norm();
    Ok((from_hermitian_coordinates(p.dim(), r.as_slice()), residual))
}

/// Nearest-in-spectrum density matrix: negative eigenvalues set to zero,
/// trace rescaled to one.
fn project(raw: &ComplexMatrix) -> Result<DensityMatrix> {
    let d = raw.rows();
    let (values, vectors) = hermitian_eigen(raw)?;
    let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Ok(DensityMatrix::maximally_mixed(d));
    }
    let mut rho = ComplexMatrix::zeros(d, d);
    for (w, v) in clipped.iter().zip(&vectors) {
        if *w > 0.0 {
            rho = rho.add(&v.density().scale(C64::new(w / total, 0.0)))?;
        }
    }
    Ok(DensityMatrix::new(rho).expect("projected estimate is a density matrix"))
}

/// Measures `R` fresh copies of `psi` with `povm` and reconstructs the state.
pub fn attention_repetition<R: Rng + ?Sized>(
    psi: &StateVector,
    repeats: u64,
    povm: &Povm,
    rng: &mut R,
) -> Result<TomographyResult> {
    if repeats == 0 {
        return Err(MeasurementError::Parameter("at least one repetition is needed".into()));
    }
    let h = simulate_measurement(povm, &psi.density(), repeats, rng);
    tomography_linear(povm, &h)
}
