use super::*;
use crate::linalg::trace_distance;
use crate::random::{haar_state, random_density, stream_rng};

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn pauli_povms() -> Povm {
    let parts: Vec<Povm> = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
        .into_iter()
        .map(von_neumann_along)
        .collect();
    Povm::mixture(&parts).unwrap()
}

/// Rank of the Gram matrix `G_ij = Tr(E_i E_j)`, by Gaussian elimination.
fn gram_rank(p: &Povm) -> usize {
    let n = p.len();
    let mut g: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| p.effects()[i].matmul(&p.effects()[j]).unwrap().trace().re)
                .collect()
        })
        .collect();
    let mut rank = 0;
    for col in 0..n {
        let Some(piv) = (rank..n).max_by(|&a, &b| g[a][col].abs().total_cmp(&g[b][col].abs())) else {
            break;
        };
        if g[piv][col].abs() < 1e-9 {
            continue;
        }
        g.swap(rank, piv);
        for r in 0..n {
            if r != rank {
                let f = g[r][col] / g[rank][col];
                for c in 0..n {
                    g[r][c] -= f * g[rank][c];
                }
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn povm_rejects_incomplete_and_non_positive_sets() {
    let half = ComplexMatrix::diagonal(&[0.5, 0.5]);
    assert!(matches!(Povm::new(vec![half.clone()]), Err(MeasurementError::Incomplete(_))));
    let neg = ComplexMatrix::diagonal(&[1.5, 0.5]);
    let rest = ComplexMatrix::diagonal(&[-0.5, 0.5]);
    assert!(matches!(Povm::new(vec![neg, rest]), Err(MeasurementError::EffectRange { .. })));
    assert!(matches!(Povm::new(vec![]), Err(MeasurementError::Empty)));
}

#[test]
fn infocompleteness_matches_gram_rank() {
    let sic = build_sic(2).unwrap();
    assert_eq!(is_infocomplete(sic.povm()), (true, 4));
    assert_eq!(is_infocomplete(&Povm::computational(2)), (false, 2));
    let xyz = pauli_povms();
    assert_eq!(is_infocomplete(&xyz), (true, 4));
    for p in [sic.povm().clone(), Povm::computational(2), xyz, build_sic(3).unwrap().into_povm()] {
        assert_eq!(is_infocomplete(&p).1, gram_rank(&p));
    }
}

#[test]
fn hermitian_coordinates_are_an_isometry() {
    let mut rng = stream_rng(5, 0);
    for d in 2..5 {
        let a = random_density(d, &mut rng);
        let b = random_density(d, &mut rng);
        let va = hermitian_coordinates(&a);
        let vb = hermitian_coordinates(&b);
        let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
        let tr = a.matmul(&b).unwrap().trace().re;
        assert!((dot - tr).abs() < 1e-12);
        assert!(from_hermitian_coordinates(d, &va).max_abs_diff(&a) < 1e-12);
    }
}

#[test]
fn sic_overlaps() {
    for d in [2, 3] {
        let sic = build_sic(d).unwrap();
        assert_eq!(sic.states().len(), d * d);
        let want = 1.0 / (d as f64 + 1.0);
        for (j, a) in sic.states().iter().enumerate() {
            for (k, b) in sic.states().iter().enumerate() {
                let f = a.fidelity(b);
                let expect = if j == k { 1.0 } else { want };
                assert!((f - expect).abs() < 1e-9, "d={d} ({j},{k}) {f}");
            }
        }
        let sum = sic
            .povm()
            .effects()
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, e| acc.add(e).unwrap());
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(d)) < 1e-9);
        assert!(is_infocomplete(sic.povm()).0);
    }
    assert!(matches!(build_sic(4), Err(MeasurementError::UnsupportedSic(4))));
}

#[test]
fn von_neumann_along_z_is_computational() {
    let p = von_neumann_along([0.0, 0.0, 1.0]);
    assert!(p.effects()[0].max_abs_diff(&ComplexMatrix::diagonal(&[1.0, 0.0])) < 1e-15);
    assert!(p.effects()[1].max_abs_diff(&ComplexMatrix::diagonal(&[0.0, 1.0])) < 1e-15);
}

#[test]
fn random_von_neumann_is_projective_and_uniform() {
    let mut rng = stream_rng(11, 0);
    let mut mean = [0.0; 3];
    let n = 100_000;
    for i in 0..n {
        let p = random_vn_qubit(&mut rng);
        if i < 100 {
            let (a, b) = (&p.effects()[0], &p.effects()[1]);
            assert!(a.add(b).unwrap().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
            assert!(a.matmul(b).unwrap().max_abs_diff(&ComplexMatrix::zeros(2, 2)) < 1e-12);
            assert!(a.matmul(a).unwrap().max_abs_diff(a) < 1e-12);
        }
        // Bloch direction from the + projector: n = (2 Re ρ01, -2 Im ρ01, ρ00 - ρ11)
        let e = &p.effects()[0];
        let dir = [2.0 * e[(0, 1)].re, -2.0 * e[(0, 1)].im, e[(0, 0)].re - e[(1, 1)].re];
        for k in 0..3 {
            mean[k] += dir[k] / n as f64;
        }
    }
    let norm = (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]).sqrt();
    assert!(norm < 0.01, "{norm}");
}

fn assert_within_3_sigma(h: &Histogram, probs: &[f64]) {
    let n = h.total() as f64;
    for (c, p) in h.counts.iter().zip(probs) {
        let sigma = (n * p * (1.0 - p)).sqrt().max(1.0);
        assert!((*c as f64 - n * p).abs() <= 3.0 * sigma + 1e-9, "{c} vs {}", n * p);
    }
}

#[test]
fn simulated_frequencies_follow_born_rule() {
    let mut rng = stream_rng(3, 0);
    let sic = build_sic(2).unwrap();
    let h = simulate_measurement(sic.povm(), &ComplexMatrix::diagonal(&[0.5, 0.5]), 100_000, &mut rng);
    assert_eq!(h.total(), 100_000);
    assert_within_3_sigma(&h, &[0.25; 4]);

    let plus = StateVector::from_real(&[S, S]).unwrap();
    let h = simulate_measurement(&Povm::computational(2), &plus.density(), 100_000, &mut rng);
    assert_within_3_sigma(&h, &[0.5, 0.5]);

    let rho = random_density(3, &mut rng);
    let p = build_sic(3).unwrap().into_povm();
    let probs: Vec<f64> = p
        .effects()
        .iter()
        .map(|e| rho.matmul(e).unwrap().trace().re)
        .collect();
    let h = simulate_measurement(&p, &rho, 100_000, &mut rng);
    assert_within_3_sigma(&h, &probs);
}

#[test]
fn histogram_serializes_as_outcome_map() {
    let h = Histogram { counts: vec![3, 0, 7] };
    assert_eq!(serde_json::to_string(&h).unwrap(), r#"{"0":3,"1":0,"2":7}"#);
}

#[test]
fn noiseless_inversion_is_exact() {
    let mut rng = stream_rng(8, 0);
    for p in [build_sic(2).unwrap().into_povm(), pauli_povms(), build_sic(3).unwrap().into_povm()] {
        for _ in 0..10 {
            let rho = random_density(p.dim(), &mut rng);
            let f = nalgebra::DVector::from_vec(p.probabilities(&rho));
            let (est, residual) = tomography::invert(&p, &f).unwrap();
            assert!(est.max_abs_diff(&rho) < 1e-9);
            assert!(residual < 1e-9);
        }
    }
}

#[test]
fn tomography_requires_infocomplete_povm() {
    let h = Histogram { counts: vec![5, 5] };
    assert!(matches!(
        tomography_linear(&Povm::computational(2), &h),
        Err(MeasurementError::NotInfocomplete { span: 2, needed: 4 })
    ));
    let sic = build_sic(2).unwrap();
    assert!(matches!(
        tomography_linear(sic.povm(), &Histogram { counts: vec![0; 4] }),
        Err(MeasurementError::NoSamples)
    ));
}

#[test]
fn sampled_tomography_is_close() {
    let mut rng = stream_rng(21, 0);
    let sic = build_sic(2).unwrap();
    let psi = haar_state(2, &mut rng);
    let r = attention_repetition(&psi, 100_000, sic.povm(), &mut rng).unwrap();
    let dist = trace_distance(r.estimate.matrix(), &psi.density()).unwrap();
    assert!(dist < 0.02, "{dist}");
    assert_eq!(r.sample_count, 100_000);
    assert!((r.estimate.trace() - 1.0).abs() < 1e-12);
}

#[test]
fn single_repetition_still_yields_a_state() {
    let mut rng = stream_rng(2, 0);
    let sic = build_sic(2).unwrap();
    let psi = haar_state(2, &mut rng);
    let r = attention_repetition(&psi, 1, sic.povm(), &mut rng).unwrap();
    assert!((r.estimate.trace() - 1.0).abs() < 1e-12);
    assert!(r.residual.is_finite());
    assert!(attention_repetition(&psi, 0, sic.povm(), &mut rng).is_err());
}

#[test]
fn more_repetitions_shrink_the_error() {
    let sic = build_sic(2).unwrap();
    let mut medians = Vec::new();
    for (i, r) in [1_000u64, 10_000, 100_000].into_iter().enumerate() {
        let mut d: Vec<f64> = (0..50)
            .map(|k| {
                let mut rng = stream_rng(77, (i * 100 + k) as u64);
                let psi = haar_state(2, &mut rng);
                let est = attention_repetition(&psi, r, sic.povm(), &mut rng).unwrap();
                trace_distance(est.estimate.matrix(), &psi.density()).unwrap()
            })
            .collect();
        d.sort_by(f64::total_cmp);
        medians.push(d[25]);
    }
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn fidelity_bound_values() {
    let b = recall_fidelity_bound(1, 2).unwrap();
    assert_eq!((b.numerator, b.denominator), (2, 3));
    let b = recall_fidelity_bound(1, 3).unwrap();
    assert_eq!((b.numerator, b.denominator), (1, 2));
    assert_eq!(recall_fidelity_bound(3, 2).unwrap().to_string(), "4/5");
    assert!(1.0 - recall_fidelity_bound(1_000_000, 3).unwrap().value() < 1e-5);
    assert!(recall_fidelity_bound(0, 2).is_err());
    assert!(recall_fidelity_bound(1, 1).is_err());
}

#[test]
fn covariant_frame_converges_under_refinement() {
    for m in 1..=3 {
        let coarse = CovariantQubitFrame::new(DEFAULT_MESH_POINTS).frame_deviation(m);
        let fine = CovariantQubitFrame::new(4 * DEFAULT_MESH_POINTS).frame_deviation(m);
        assert!(coarse < 1e-3, "M={m}: {coarse}");
        assert!(fine <= coarse + 1e-12, "M={m}: {fine} > {coarse}");
    }
}

#[test]
fn covariant_frame_states_point_along_mesh() {
    let f = CovariantQubitFrame::new(50);
    for j in 0..50 {
        let b = crate::linalg::bloch_coordinates(&f.state(j)).unwrap();
        let p = f.points()[j];
        assert!((0..3).all(|k| (b[k] - p[k]).abs() < 1e-12));
    }
}

#[test]
fn strategies_check_dimension() {
    let mut rng = stream_rng(1, 0);
    let q5 = haar_state(5, &mut rng);
    assert!(matches!(
        store_recall_cycle(&q5, 1, RecallStrategy::OptimalCovariantQubit, &mut rng),
        Err(MeasurementError::Unsupported { .. })
    ));
    assert!(store_recall_cycle(&q5, 1, RecallStrategy::SicEstimate, &mut rng).is_err());
    let (r, f) = store_recall_cycle(&q5, 2, RecallStrategy::RandomVnRepeat, &mut rng).unwrap();
    assert_eq!(r.dim(), 5);
    assert!((0.0..=1.0 + 1e-12).contains(&f));
    assert_eq!("sic_estimate".parse::<RecallStrategy>().unwrap(), RecallStrategy::SicEstimate);
}

fn bench(strategies: Vec<RecallStrategy>, copies: Vec<usize>, dims: Vec<usize>, trials: usize) -> Vec<BenchRow> {
    let cfg = MemoryBenchmark {
        strategies,
        copies,
        dims,
        trials,
        seed: 42,
    };
    benchmark_memory(&cfg).unwrap().0
}

#[test]
fn covariant_strategy_reaches_the_bound() {
    for row in bench(vec![RecallStrategy::OptimalCovariantQubit], vec![1, 3], vec![2], 20_000) {
        assert!((row.mean_fidelity - row.bound).abs() < 0.01, "{row:?}");
    }
}

#[test]
fn suboptimal_strategies_respect_the_bound() {
    let rows = bench(
        vec![RecallStrategy::SicEstimate, RecallStrategy::RandomVnRepeat],
        vec![1, 2, 4],
        vec![2, 3],
        5_000,
    );
    assert_eq!(rows.len(), 12);
    for row in &rows {
        assert!(row.mean_fidelity <= row.bound + 3.0 * row.std_error, "{row:?}");
        assert!(row.mean_fidelity < 1.0);
    }
}

#[test]
fn benchmark_warns_on_unsupported_pairs_and_is_reproducible() {
    let cfg = MemoryBenchmark {
        strategies: RecallStrategy::ALL.to_vec(),
        copies: vec![1],
        dims: vec![5],
        trials: 200,
        seed: 9,
    };
    let (rows, warnings) = benchmark_memory(&cfg).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].strategy, RecallStrategy::RandomVnRepeat);
    assert_eq!(warnings.len(), 2);
    assert_eq!(benchmark_memory(&cfg).unwrap().0, rows);
    let csv = to_csv(&rows);
    assert!(csv.starts_with("strategy,M,d,trials,mean_fidelity,std_error,bound\nrandom_vn_repeat,1,5,200,"));
}
