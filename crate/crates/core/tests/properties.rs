//! Algebraic invariants checked on random inputs.

use proptest::prelude::*;

use ontic_core::classical::random_markov;
use ontic_core::engine::{compile_history, count_histories, foliate, history_operator, FoliationStrategy};
use ontic_core::generate::{random_circuit, RandomCircuitSpec};
use ontic_core::linalg::is_contraction;
use ontic_core::quantum::apply_atomic;
use ontic_core::random::{ginibre, haar_state, random_density, random_test};
use ontic_core::*;

fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    stream_rng(seed, 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kronecker_mixed_product(seed in any::<u64>(), a in 1usize..4, b in 1usize..4) {
        let mut r = rng(seed);
        let (x, y) = (ginibre(a, a, &mut r), ginibre(b, b, &mut r));
        let (u, v) = (ginibre(a, a, &mut r), ginibre(b, b, &mut r));
        let lhs = x.kron(&y).matmul(&u.kron(&v)).unwrap();
        let rhs = x.matmul(&u).unwrap().kron(&y.matmul(&v).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), a in 1usize..4, b in 1usize..4) {
        let mut r = rng(seed);
        let (rho, sigma) = (random_density(a, &mut r), random_density(b, &mut r));
        let shape = SystemShape::new(vec![a, b]).unwrap();
        let joint = rho.kron(&sigma);
        prop_assert!(partial_trace(&joint, &shape, &[0]).unwrap().max_abs_diff(&rho) < 1e-12);
        prop_assert!(partial_trace(&joint, &shape, &[1]).unwrap().max_abs_diff(&sigma) < 1e-12);
    }

    #[test]
    fn schmidt_reconstructs_and_marginals_agree(seed in any::<u64>(), a in 1usize..5, b in 1usize..5) {
        let mut r = rng(seed);
        let psi = haar_state(a * b, &mut r);
        let shape = SystemShape::new(vec![a, b]).unwrap();
        let s = schmidt_decompose(&psi, &shape).unwrap();
        prop_assert!(s.reconstruct().max_abs_diff(&psi) < 1e-10);
        let norm: f64 = s.coefficients.iter().map(|c| c * c).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
        // Entangled marginals are mixed by at least 2 λ₁² λ₂².
        let pa = purity(&DensityMatrix::new(reduced_density(&psi, &shape, &[0]).unwrap()).unwrap());
        let pb = purity(&DensityMatrix::new(reduced_density(&psi, &shape, &[1]).unwrap()).unwrap());
        prop_assert!((pa - pb).abs() < 1e-10);
        if s.rank() >= 2 {
            let gap = 2.0 * (s.coefficients[0] * s.coefficients[1]).powi(2);
            prop_assert!(pa <= 1.0 - gap + 1e-10);
        }
    }

    #[test]
    fn atomic_events_preserve_purity(seed in any::<u64>(), din in 1usize..4, dout in 1usize..4, n in 1usize..4) {
        let mut r = rng(seed);
        let n = n.max(din.div_ceil(dout));
        let ops = random_test(din, dout, n, &mut r);
        let test = KrausSet::new(ops).unwrap();
        prop_assert!(test.is_deterministic(1e-10));
        let psi = haar_state(din, &mut r);
        let mut total = 0.0;
        for i in 0..test.len() {
            let out = apply_atomic(&test.event(i), &psi).unwrap();
            let w = out.norm_sqr();
            total += w;
            prop_assert!(is_contraction(&test.operators()[i]).is_contraction);
            if w > 1e-12 {
                let rho = DensityMatrix::pure(&out.normalized().unwrap());
                prop_assert!((purity(&rho) - 1.0).abs() < 1e-10);
            }
        }
        prop_assert!((total - 1.0).abs() < 1e-10);
        // Coarse-graining is trace preserving.
        prop_assert!(epistemic_of(&test).is_trace_preserving(1e-10));
    }

    #[test]
    fn dilation_reproduces_every_branch(seed in any::<u64>(), d in 2usize..4, n in 1usize..4) {
        let mut r = rng(seed);
        let test = KrausSet::new(random_test(d, d, n, &mut r)).unwrap();
        let u = dilate(&test, 1e-10).unwrap();
        prop_assert!(u.unitary.is_unitary(1e-10));
        let rho = random_density(d, &mut r);
        for i in 0..n {
            let k = &test.operators()[i];
            let want = k.matmul(&rho).unwrap().matmul(&k.adjoint()).unwrap();
            prop_assert!(u.branch(&rho, i).unwrap().max_abs_diff(&want) < 1e-8);
        }
    }

    #[test]
    fn substochastic_composition_matches_paths(seed in any::<u64>(), a in 1usize..5, b in 1usize..5, c in 1usize..5) {
        let mut r = rng(seed);
        let (m1, m2) = (random_markov(b, a, &mut r), random_markov(c, b, &mut r));
        let both = m1.then(&m2).unwrap();
        for i in 0..c {
            for j in 0..a {
                let paths: f64 = (0..b).map(|k| m2.get(i, k) * m1.get(k, j)).sum();
                prop_assert!((both.get(i, j) - paths).abs() < 1e-12);
            }
        }
        prop_assert!(both.column_sums().iter().all(|&s| s <= 1.0 + 1e-12));
    }

    #[test]
    fn factorization_of_a_product_is_the_union(seed in any::<u64>(), na in 1usize..3, nb in 1usize..3) {
        let mut r = rng(seed);
        let (psi, phi) = (haar_state(1 << na, &mut r), haar_state(1 << nb, &mut r));
        let fa = finest_factorization(&psi, &SystemShape::qubits(na)).unwrap();
        let fb = finest_factorization(&phi, &SystemShape::qubits(nb)).unwrap();
        let joint = finest_factorization(&psi.kron(&phi), &SystemShape::qubits(na + nb)).unwrap();
        let mut want = fa.blocks.clone();
        want.extend(fb.blocks.iter().map(|b| b.iter().map(|i| i + na).collect()));
        prop_assert_eq!(joint.blocks, want);
        prop_assert!(joint.purities.iter().all(|p| (p - 1.0).abs() < 1e-8));
    }

    #[test]
    fn random_circuits_are_foliation_invariant_contractions(seed in any::<u64>()) {
        let c = random_circuit(&mut rng(seed), &RandomCircuitSpec::default());
        let p = Program::single(c.clone());
        prop_assume!(count_histories(&p, 4096).is_ok());
        let hist = enumerate_histories(&p, &EngineConfig::default()).unwrap();
        let total: f64 = hist.iter().map(|h| h.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        let a = &hist[0].history[0];
        let asap = compile_history(&c, &foliate(&c, &FoliationStrategy::Asap).unwrap(), a, 4096).unwrap();
        prop_assert!(asap.contraction().is_contraction);
        let alap = compile_history(&c, &foliate(&c, &FoliationStrategy::Alap).unwrap(), a, 4096).unwrap();
        let rand = compile_history(&c, &foliate(&c, &FoliationStrategy::Random(seed)).unwrap(), a, 4096).unwrap();
        prop_assert!(asap.operator.max_abs_diff(&alap.operator) < 1e-10);
        prop_assert!(asap.operator.max_abs_diff(&rand.operator) < 1e-10);
        let whole = history_operator(&p, &hist[0].history, 4096).unwrap();
        prop_assert!(whole.max_abs_diff(&asap.operator) < 1e-10);
    }

    #[test]
    fn sampled_weight_is_history_probability(seed in any::<u64>()) {
        let c = random_circuit(&mut rng(seed), &RandomCircuitSpec::default());
        let p = Program::single(c);
        let t = run_trajectory(&p, seed, 1, &EngineConfig::default()).unwrap();
        let exact = history_probability(&p, &t.history(), 4096).unwrap();
        prop_assert!((t.probability - exact).abs() < 1e-10);
        prop_assert!(t.probability > 0.0);
    }

    #[test]
    fn sic_tomography_converges(seed in any::<u64>(), d in 2usize..4) {
        let mut r = rng(seed);
        let psi = haar_state(d, &mut r);
        let sic = build_sic(d).unwrap();
        let est = attention_repetition(&psi, 200_000, sic.povm(), &mut r).unwrap();
        prop_assert!(trace_distance(est.estimate.matrix(), &psi.density()).unwrap() < 0.05);
    }
}
