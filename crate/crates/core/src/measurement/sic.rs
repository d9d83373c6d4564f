use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::linalg::{ComplexMatrix, StateVector, C64};

use super::{MeasurementError, Povm, Result};

/// Tolerance on the equal-overlap condition.
pub const TAU_SIC: f64 = 1e-9;

/// `d²` pure states with `|⟨ψ_j|ψ_k⟩|² = (dδ_jk + 1)/(d + 1)`; the effects
/// are `|ψ_j⟩⟨ψ_j| / d`.
#[derive(Clone, Debug, PartialEq)]
pub struct SicPovm {
    dim: usize,
    states: Vec<StateVector>,
    povm: Povm,
}

impl SicPovm {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn into_povm(self) -> Povm {
        self.povm
    }

    /// Largest deviation of the Gram moduli from `(dδ_jk + 1)/(d + 1)`.
    pub fn overlap_deviation(&self) -> f64 {
        let d = self.dim as f64;
        let mut worst: f64 = 0.0;
        for (j, a) in self.states.iter().enumerate() {
            for (k, b) in self.states.iter().enumerate() {
                let want = if j == k { 1.0 } else { 1.0 / (d + 1.0) };
                worst = worst.max((a.fidelity(b) - want).abs());
            }
        }
        worst
    }
}

fn from_bloch(theta: f64, phi: f64) -> StateVector {
    StateVector::new(vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ])
    .expect("nonempty")
}

/// Tetrahedron on the Bloch sphere: one vertex at the north pole, the rest
/// at polar angle `arccos(-1/3)`.
fn tetrahedron() -> Vec<StateVector> {
    let theta = (-1.0f64 / 3.0).acos();
    let mut states = vec![from_bloch(0.0, 0.0)];
    states.extend((0..3).map(|k| from_bloch(theta, 2.0 * PI * k as f64 / 3.0)));
    states
}

/// Weyl–Heisenberg orbit `X^a Z^b |f⟩` of the fiducial `(0, 1, -1)/√2`.
fn qutrit_orbit() -> Vec<StateVector> {
    let f = [0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2];
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * PI * (k % 3) as f64 / 3.0);
    let mut states = Vec::with_capacity(9);
    for a in 0..3 {
        for b in 0..3 {
            // (X^a Z^b f)_i = ω^{b(i-a)} f_{i-a}
            let amps = (0..3)
                .map(|i| {
                    let src = (i + 3 - a) % 3;
                    omega(b * src) * f[src]
                })
                .collect();
            states.push(StateVector::new(amps).expect("nonempty"));
        }
    }
    states
}

/// SIC-POVM for `d ∈ {2, 3}`, checked against the overlap condition and
/// completeness on construction.
pub fn build_sic(d: usize) -> Result<SicPovm> {
    let states = match d {
        2 => tetrahedron(),
        3 => qutrit_orbit(),
        _ => return Err(MeasurementError::UnsupportedSic(d)),
    };
    let scale = C64::new(1.0 / d as f64, 0.0);
    let effects: Vec<ComplexMatrix> = states.iter().map(|s| s.density().scale(scale)).collect();
    let povm = Povm::new(effects)?;
    let sic = SicPovm { dim: d, states, povm };
    let dev = sic.overlap_deviation();
    if dev > TAU_SIC {
        return Err(MeasurementError::SicCheck(dev));
    }
    Ok(sic)
}
