//! Seeded randomness: per-stream RNGs and Haar-distributed objects.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, StateVector, C64};

/// Independent RNG stream `stream` of the master `seed`. Streams of one seed
/// never overlap, so parallel work keyed by index is order-independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random pure state: normalized Gaussian amplitudes.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    loop {
        let v = StateVector::new((0..dim).map(|_| gaussian(rng)).collect()).expect("finite");
        if let Ok(n) = v.normalized() {
            return n;
        }
    }
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix with
/// the phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g: DMatrix<C64> = ginibre(dim, dim, rng).to_nalgebra();
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::from_nalgebra(&q)
}

/// Random isometry `C^cols → C^rows` (`rows ≥ cols`).
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(rows >= cols, "an isometry needs rows >= cols");
    let u = haar_unitary(rows, rng);
    ComplexMatrix::from_fn(rows, cols, |r, c| u[(r, c)])
}

/// Kraus operators `d_in → d_out` of a random deterministic test with
/// `outcomes` atomic events. Requires `d_out * outcomes ≥ d_in`.
pub fn random_test<R: Rng + ?Sized>(
    d_in: usize,
    d_out: usize,
    outcomes: usize,
    rng: &mut R,
) -> Vec<ComplexMatrix> {
    let v = random_isometry(d_out * outcomes, d_in, rng);
    (0..outcomes)
        .map(|i| ComplexMatrix::from_fn(d_out, d_in, |r, c| v[(i * d_out + r, c)]))
        .collect()
}

/// Random full-rank density matrix `GG†/Tr(GG†)`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, dim, rng);
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    rho.scale(C64::new(1.0 / tr, 0.0))
}

/// Uniformly distributed unit vector in `R³`.
pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = stream_rng(1, 0);
        for d in [1, 2, 3, 5] {
            assert!(haar_unitary(d, &mut rng).is_unitary(1e-12));
        }
    }

    #[test]
    fn random_test_is_complete() {
        let mut rng = stream_rng(2, 0);
        let ks = random_test(3, 2, 2, &mut rng);
        let sum = ComplexMatrix::gram_sum(&ks).unwrap();
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: u64 = stream_rng(7, 0).random();
        let b: u64 = stream_rng(7, 1).random();
        let a2: u64 = stream_rng(7, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
    }
}
