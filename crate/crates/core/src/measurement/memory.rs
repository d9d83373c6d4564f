use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{bloch_coordinates, hermitian_eigen, ComplexMatrix, StateVector, C64};
use crate::random::{haar_state, haar_unitary, stream_rng};

use super::{build_sic, sample_counts, sample_index, tomography_linear, MeasurementError, Result, SicPovm};

/// Mesh size of the discretized covariant qubit measurement.
pub const DEFAULT_MESH_POINTS: usize = 4000;

/// Trials per parallel task in [`benchmark_memory`].
const CHUNK: usize = 1000;

/// `(M + 1)/(M + d)` as an exact fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FidelityBound {
    pub numerator: u64,
    pub denominator: u64,
}

impl FidelityBound {
    pub fn value(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for FidelityBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Best average fidelity of re-preparing a Haar-random `d`-level state from
/// `M` copies, in lowest terms.
pub fn recall_fidelity_bound(copies: u64, d: u64) -> Result<FidelityBound> {
    if copies < 1 || d < 2 {
        return Err(MeasurementError::Parameter(format!(
            "need M ≥ 1 and d ≥ 2, got M = {copies}, d = {d}"
        )));
    }
    let (n, m) = (copies + 1, copies + d);
    let g = gcd(n, m);
    Ok(FidelityBound {
        numerator: n / g,
        denominator: m / g,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallStrategy {
    /// Spin-coherent covariant measurement on the symmetric subspace (qubits).
    OptimalCovariantQubit,
    /// SIC outcomes per copy, linear-inversion estimate, top eigenvector.
    SicEstimate,
    /// Each copy in its own Haar-random basis; top eigenvector of the
    /// summed outcome projectors.
    RandomVnRepeat,
}

impl RecallStrategy {
    pub const ALL: [RecallStrategy; 3] = [Self::OptimalCovariantQubit, Self::SicEstimate, Self::RandomVnRepeat];

    pub fn name(self) -> &'static str {
        match self {
            Self::OptimalCovariantQubit => "optimal_covariant_qubit",
            Self::SicEstimate => "sic_estimate",
            Self::RandomVnRepeat => "random_vn_repeat",
        }
    }

    pub fn supports(self, d: usize) -> bool {
        match self {
            Self::OptimalCovariantQubit => d == 2,
            Self::SicEstimate => d == 2 || d == 3,
            Self::RandomVnRepeat => d >= 2,
        }
    }

    fn id(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for RecallStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RecallStrategy {
    type Err = MeasurementError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| MeasurementError::Parameter(format!("unknown strategy `{s}`")))
    }
}

/// Near-uniform Bloch mesh (Fibonacci sphere) defining the discretized
/// covariant POVM `{(M+1)/N |n_j⟩⟨n_j|^⊗M}` on the symmetric subspace.
#[derive(Clone, Debug)]
pub struct CovariantQubitFrame {
    points: Vec<[f64; 3]>,
}

impl CovariantQubitFrame {
    pub fn new(n: usize) -> Self {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let points = (0..n)
            .map(|i| {
                let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                [r * phi.cos(), r * phi.sin(), z]
            })
            .collect();
        Self { points }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    /// Spin-coherent qubit state along `n`.
    pub fn state(&self, j: usize) -> StateVector {
        let [x, y, z] = self.points[j];
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        StateVector::new(vec![
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ])
        .expect("nonempty")
    }

    /// Largest entry of `Σ_j (M+1)/N |n_j⟩⟨n_j|^⊗M − P_sym`, computed in the
    /// Dicke basis. Zero for an exact frame.
    pub fn frame_deviation(&self, copies: usize) -> f64 {
        let m = copies;
        let dim = m + 1;
        let binom: Vec<f64> = (0..=m).map(|k| binomial(m, k)).collect();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        let w = (m + 1) as f64 / self.points.len() as f64;
        for j in 0..self.points.len() {
            let s = self.state(j);
            let (a, b) = (s.amplitudes()[0], s.amplitudes()[1]);
            let amps: Vec<C64> = (0..=m)
                .map(|k| a.powu((m - k) as u32) * b.powu(k as u32) * binom[k].sqrt())
                .collect();
            for r in 0..dim {
                for c in 0..dim {
                    acc[(r, c)] += amps[r] * amps[c].conj() * w;
                }
            }
        }
        acc.max_abs_diff(&ComplexMatrix::identity(dim))
    }

    /// Outcome `j` has probability `∝ ((1 + n_j·m)/2)^M` for Bloch vector `m`.
    fn sample<R: Rng + ?Sized>(&self, bloch: [f64; 3], copies: usize, rng: &mut R) -> usize {
        let weights: Vec<f64> = self
            .points
            .iter()
            .map(|n| (0.5 * (1.0 + n[0] * bloch[0] + n[1] * bloch[1] + n[2] * bloch[2])).powi(copies as i32))
            .collect();
        sample_index(&weights, rng)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn default_frame() -> &'static CovariantQubitFrame {
    static FRAME: OnceLock<CovariantQubitFrame> = OnceLock::new();
    FRAME.get_or_init(|| CovariantQubitFrame::new(DEFAULT_MESH_POINTS))
}

fn sic(d: usize) -> Result<&'static SicPovm> {
    static SIC2: OnceLock<SicPovm> = OnceLock::new();
    static SIC3: OnceLock<SicPovm> = OnceLock::new();
    let cell = match d {
        2 => &SIC2,
        3 => &SIC3,
        _ => return Err(MeasurementError::UnsupportedSic(d)),
    };
    if let Some(s) = cell.get() {
        return Ok(s);
    }
    let built = build_sic(d)?;
    Ok(cell.get_or_init(|| built))
}

fn top_eigenvector(m: &ComplexMatrix) -> Result<StateVector> {
    let (_, vectors) = hermitian_eigen(m)?;
    Ok(vectors.into_iter().next().expect("nonempty spectrum"))
}

/// Measures `M` copies of `psi`, re-prepares an estimate and returns it with
/// its fidelity `|⟨ψ|ψ̂⟩|²`.
pub fn store_recall_cycle<R: Rng + ?Sized>(
    psi: &StateVector,
    copies: usize,
    strategy: RecallStrategy,
    rng: &mut R,
) -> Result<(StateVector, f64)> {
    let d = psi.dim();
    if copies == 0 {
        return Err(MeasurementError::Parameter("at least one copy is needed".into()));
    }
    if !strategy.supports(d) {
        return Err(MeasurementError::Unsupported {
            strategy: strategy.name().into(),
            dim: d,
        });
    }
    let recalled = match strategy {
        RecallStrategy::OptimalCovariantQubit => {
            let frame = default_frame();
            let j = frame.sample(bloch_coordinates(psi)?, copies, rng);
            frame.state(j)
        }
        RecallStrategy::SicEstimate => {
            let sic = sic(d)?;
            let probs = sic.povm().pure_probabilities(psi);
            let h = sample_counts(&probs, copies as u64, rng);
            let est = tomography_linear(sic.povm(), &h)?;
            top_eigenvector(est.estimate.matrix())?
        }
        RecallStrategy::RandomVnRepeat => {
            let mut acc = ComplexMatrix::zeros(d, d);
            for _ in 0..copies {
                let u = haar_unitary(d, rng);
                let basis: Vec<StateVector> = (0..d)
                    .map(|k| StateVector::new((0..d).map(|r| u[(r, k)]).collect()).expect("nonempty"))
                    .collect();
                let probs: Vec<f64> = basis.iter().map(|b| b.fidelity(psi)).collect();
                let k = sample_index(&probs, rng);
                acc = acc.add(&basis[k].density())?;
            }
            top_eigenvector(&acc)?
        }
    };
    let fidelity = psi.fidelity(&recalled);
    Ok((recalled, fidelity))
}

/// Sweep over strategies, copy numbers and dimensions.
#[derive(Clone, Debug)]
pub struct MemoryBenchmark {
    pub strategies: Vec<RecallStrategy>,
    pub copies: Vec<usize>,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub strategy: RecallStrategy,
    #[serde(rename = "M")]
    pub copies: usize,
    pub d: usize,
    pub trials: usize,
    pub mean_fidelity: f64,
    pub std_error: f64,
    pub bound: f64,
}

/// Monte Carlo mean recall fidelity over Haar-random states for every
/// supported (strategy, M, d); unsupported combinations are skipped and
/// reported as warnings.
///
/// Trials run in parallel chunks; each chunk owns an RNG stream derived
/// from (strategy, M, d, chunk), so results do not depend on thread count
/// or on the order of the sweep.
pub fn benchmark_memory(cfg: &MemoryBenchmark) -> Result<(Vec<BenchRow>, Vec<String>)> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for &strategy in &cfg.strategies {
        for &m in &cfg.copies {
            for &d in &cfg.dims {
                if !strategy.supports(d) {
                    warnings.push(format!("skipping {strategy} with M = {m}, d = {d}: unsupported dimension"));
                    continue;
                }
                let bound = recall_fidelity_bound(m as u64, d as u64)?.value();
                let chunks = cfg.trials.div_ceil(CHUNK);
                let sums = (0..chunks)
                    .into_par_iter()
                    .map(|c| {
                        let stream = (strategy.id() << 56) | ((m as u64) << 40) | ((d as u64) << 32) | c as u64;
                        let mut rng = stream_rng(cfg.seed, stream);
                        let n = CHUNK.min(cfg.trials - c * CHUNK);
                        let (mut s, mut s2) = (0.0, 0.0);
                        for _ in 0..n {
                            let psi = haar_state(d, &mut rng);
                            let (_, f) = store_recall_cycle(&psi, m, strategy, &mut rng)?;
                            s += f;
                            s2 += f * f;
                        }
                        Ok((s, s2))
                    })
                    .collect::<Result<Vec<(f64, f64)>>>()?;
                let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
                let n = cfg.trials as f64;
                let mean = if cfg.trials > 0 { s / n } else { f64::NAN };
                let std_error = if cfg.trials > 1 {
                    ((s2 - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
                } else {
                    f64::NAN
                };
                rows.push(BenchRow {
                    strategy,
                    copies: m,
                    d,
                    trials: cfg.trials,
                    mean_fidelity: mean,
                    std_error,
                    bound,
                });
            }
        }
    }
    Ok((rows, warnings))
}

/// CSV with header `strategy,M,d,trials,mean_fidelity,std_error,bound`.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("strategy,M,d,trials,mean_fidelity,std_error,bound\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.16e},{:.16e},{:.16e}\n",
            r.strategy, r.copies, r.d, r.trials, r.mean_fidelity, r.std_error, r.bound
        ));
    }
    out
}
