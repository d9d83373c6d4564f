//! Which subsystems of a pure state form a single individual: the finest
//! tensor factorization, its evolution along a trajectory, and the number
//! of possible entanglement patterns.

use serde::Serialize;
use thiserror::Error;

use crate::engine::Trajectory;
use crate::linalg::{reduced_density, ComplexMatrix, LinalgError, StateVector, SystemShape, TAU_NORM};
use crate::quantum::DensityMatrix;

/// Purity threshold: a reduced state with `Tr ρ² ≥ 1 − TAU_PURE` is pure.
pub const TAU_PURE: f64 = 1e-8;

/// Largest `n` for which [`count_entanglement_patterns`] is defined.
pub const MAX_PATTERN_SYSTEMS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndividuationError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("step {0} has no stored state; run with state storage enabled")]
    MissingState(usize),
    #[error("pattern count is defined for 1 ≤ n ≤ {MAX_PATTERN_SYSTEMS}, got {0}")]
    PatternRange(usize),
}

pub type Result<T> = std::result::Result<T, IndividuationError>;

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    matrix_purity(rho.matrix())
}

fn matrix_purity(m: &ComplexMatrix) -> f64 {
    m.data().iter().map(|z| z.norm_sqr()).sum()
}

/// Blocks of system indices (0-based, ascending, ordered by first element)
/// whose reduced states are pure and cannot be split further.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MindPartition {
    pub step: usize,
    #[serde(rename = "partition")]
    pub blocks: Vec<Vec<usize>>,
    /// Purity of each block's reduced state.
    pub purities: Vec<f64>,
}

/// Purity of the reduced state on `set`, computed on the smaller side of
/// the cut (both marginals of a pure state share their spectrum).
fn subset_purity(psi: &StateVector, shape: &SystemShape, set: &[usize]) -> Result<f64> {
    let rest: Vec<usize> = (0..shape.len()).filter(|i| !set.contains(i)).collect();
    let side = if shape.sub_dim(set) <= shape.sub_dim(&rest) { set } else { &rest[..] };
    if side.is_empty() {
        return Ok(1.0);
    }
    Ok(matrix_purity(&reduced_density(psi, shape, side)?))
}

/// Finest tensor factorization of a pure state.
///
/// A set of factors has a pure marginal exactly when it is a union of
/// factorization blocks, so the block holding the smallest remaining index
/// is the smallest pure set containing it. Sets are searched by size, then
/// lexicographically, which makes the result independent of search order.
pub fn finest_factorization(psi: &StateVector, shape: &SystemShape) -> Result<MindPartition> {
    shape.check_dim(psi.dim())?;
    if !psi.is_normalized(TAU_NORM) {
        return Err(IndividuationError::NotNormalized(psi.norm()));
    }
    let mut remaining: Vec<usize> = (0..shape.len()).collect();
    let mut blocks = Vec::new();
    let mut purities = Vec::new();
    while let Some(&first) = remaining.first() {
        let others = &remaining[1..];
        let mut found = None;
        'size: for extra in 0..others.len() {
            for combo in combinations(others.len(), extra) {
                let mut set = vec![first];
                set.extend(combo.iter().map(|&i| others[i]));
                let p = subset_purity(psi, shape, &set)?;
                if p >= 1.0 - TAU_PURE {
                    found = Some((set, p));
                    break 'size;
                }
            }
        }
        let (block, p) = match found {
            Some(f) => f,
            None => {
                let all = remaining.clone();
                let p = subset_purity(psi, shape, &all)?;
                (all, p)
            }
        };
        remaining.retain(|i| !block.contains(i));
        blocks.push(block);
        purities.push(p);
    }
    Ok(MindPartition {
        step: 0,
        blocks,
        purities,
    })
}

/// `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// One partition per step, from the states stored in the trajectory.
pub fn classify_timeline(traj: &Trajectory) -> Result<Vec<MindPartition>> {
    traj.steps
        .iter()
        .enumerate()
        .map(|(t, step)| {
            let (Some(state), Some(shape)) = (&step.state, &step.shape) else {
                return Err(IndividuationError::MissingState(t));
            };
            let mut p = finest_factorization(state, shape)?;
            p.step = t;
            Ok(p)
        })
        .collect()
}

/// Number of partitions of `n` (Euler's recurrence by dynamic programming).
pub fn partition_count(n: usize) -> u128 {
    let mut p = vec![0u128; n + 1];
    p[0] = 1;
    for part in 1..=n {
        for m in part..=n {
            p[m] += p[m - part];
        }
    }
    p[n]
}

/// `p(n) · n!`: unordered block sizes times labelings of the systems.
pub fn count_entanglement_patterns(n: usize) -> Result<u128> {
    if !(1..=MAX_PATTERN_SYSTEMS).contains(&n) {
        return Err(IndividuationError::PatternRange(n));
    }
    let fact: u128 = (1..=n as u128).product();
    Ok(partition_count(n) * fact)
}
