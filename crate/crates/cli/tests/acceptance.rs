//! Acceptance checks, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so that every criterion is
//! reported even when an earlier one fails; the exit status is nonzero if
//! any fails.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ontic_core::classical::random_markov;
use ontic_core::engine::{compile_history, foliate, FoliationStrategy};
use ontic_core::generate::{random_circuit, unitary_program, RandomCircuitSpec};
use ontic_core::random::{haar_state, random_density, random_test};
use ontic_core::*;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn circuits_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../circuits")
}

fn load(name: &str) -> Program {
    let text = std::fs::read_to_string(circuits_dir().join(name)).expect("shipped circuit");
    parse_program(&text).expect("shipped circuit parses")
}

fn eq6(input: &str) -> Program {
    load("eq6.circuit").with_inputs(&[Some(input.into())]).unwrap()
}

fn qualia(input: &str) -> Program {
    load("qualia_bloch.json").with_inputs(&[Some(input.into())]).unwrap()
}

fn cfg() -> EngineConfig {
    EngineConfig::default()
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Every history of a single-circuit program, compiled along asap, alap and
/// ten random foliations, gives the same operator.
fn foliation_invariance() -> Check {
    let start = Instant::now();
    let mut programs: Vec<Program> = ["0", "1", "2"].iter().map(|x| eq6(x)).collect();
    let mut rng = stream_rng(2024, 0);
    programs.extend((0..50).map(|_| Program::single(random_circuit(&mut rng, &RandomCircuitSpec::default()))));
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for p in &programs {
        let c = p.circuit(0);
        let mut strategies = vec![FoliationStrategy::Asap, FoliationStrategy::Alap];
        strategies.extend((0..10).map(FoliationStrategy::Random));
        let folds: Vec<_> = strategies.iter().map(|s| foliate(c, s)).collect::<Result<_, _>>().map_err(err)?;
        for h in enumerate_histories(p, &cfg()).map_err(err)? {
            let a = &h.history[0];
            let reference = compile_history(c, &folds[0], a, DEFAULT_MAX).map_err(err)?.operator;
            for f in &folds[1..] {
                let op = compile_history(c, f, a, DEFAULT_MAX).map_err(err)?.operator;
                worst = worst.max(op.max_abs_diff(&reference));
            }
            checked += 1;
        }
    }
    ensure(worst <= 1e-10, || format!("max deviation {worst:e}"))?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("{checked} histories over {} circuits, max deviation {worst:.1e}", programs.len()))
}

const DEFAULT_MAX: usize = 4096;

fn history_normalization() -> Check {
    let mut programs: Vec<(String, Program)> = ["0", "1", "2"].iter().map(|x| (format!("eq6[{x}]"), eq6(x))).collect();
    programs.push(("bell".into(), load("bell.circuit")));
    programs.push(("merge_split".into(), load("merge_split.json")));
    for x in ["red", "green", "blue"] {
        programs.push((format!("qualia[{x}]"), qualia(x)));
    }
    let mut worst = 0.0f64;
    for (name, p) in &programs {
        let total: f64 = enumerate_histories(p, &cfg()).map_err(err)?.iter().map(|h| h.probability).sum();
        ensure((total - 1.0).abs() <= 1e-9, || format!("{name}: total {total}"))?;
        worst = worst.max((total - 1.0).abs());
    }
    Ok(format!("{} programs, max |Σp − 1| = {worst:.1e}", programs.len()))
}

fn sampler_matches_enumeration() -> Check {
    let start = Instant::now();
    let p = eq6("0");
    let exact: HashMap<Vec<Vec<usize>>, f64> =
        enumerate_histories(&p, &cfg()).map_err(err)?.into_iter().map(|h| (h.history, h.probability)).collect();
    let n = 100_000;
    let mut counts: HashMap<Vec<Vec<usize>>, usize> = HashMap::new();
    for t in run_many(&p, 7, n, &cfg()).map_err(err)? {
        *counts.entry(t.history()).or_default() += 1;
    }
    ensure(counts.keys().all(|h| exact.contains_key(h)), || "sampled an unlisted history".into())?;
    let tv = 0.5
        * exact
            .iter()
            .map(|(h, &q)| (counts.get(h).copied().unwrap_or(0) as f64 / n as f64 - q).abs())
            .sum::<f64>();
    ensure(tv < 0.01, || format!("total variation {tv}"))?;
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{n} trajectories, {} histories, TV = {tv:.4}", exact.len()))
}

fn fidelity_bound() -> Check {
    let start = Instant::now();
    let trials = 100_000;
    let (rows, _) = benchmark_memory(&MemoryBenchmark {
        strategies: RecallStrategy::ALL.to_vec(),
        copies: vec![1, 2, 3],
        dims: vec![2, 3],
        trials,
        seed: 11,
    })
    .map_err(err)?;
    let mut summary = Vec::new();
    for r in &rows {
        if r.strategy == RecallStrategy::OptimalCovariantQubit {
            ensure((r.mean_fidelity - r.bound).abs() <= 0.005, || {
                format!("optimal M={}: {} vs {}", r.copies, r.mean_fidelity, r.bound)
            })?;
            summary.push(format!("M={} {:.4}/{:.4}", r.copies, r.mean_fidelity, r.bound));
        } else {
            ensure(r.mean_fidelity <= r.bound + 3.0 * r.std_error, || {
                format!("{} M={} d={}: {} above {}", r.strategy, r.copies, r.d, r.mean_fidelity, r.bound)
            })?;
        }
    }
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!("{} rows; optimal {}", rows.len(), summary.join(", ")))
}

fn sic_frames() -> Check {
    let mut out = Vec::new();
    for d in [2, 3] {
        let sic = build_sic(d).map_err(err)?;
        let overlap = sic.overlap_deviation();
        let mut sum = ComplexMatrix::zeros(d, d);
        for e in sic.povm().effects() {
            sum = sum.add(e).map_err(err)?;
        }
        let completeness = sum.max_abs_diff(&ComplexMatrix::identity(d));
        ensure(sic.povm().len() == d * d, || format!("d={d}: {} effects", sic.povm().len()))?;
        ensure(overlap <= 1e-9 && completeness <= 1e-9, || {
            format!("d={d}: overlap {overlap:e}, completeness {completeness:e}")
        })?;
        out.push(format!("d={d} overlap {overlap:.1e} completeness {completeness:.1e}"));
    }
    Ok(out.join("; "))
}

fn tomography() -> Check {
    let mut rng = stream_rng(5, 0);
    let sic = build_sic(2).map_err(err)?;
    let mut distances: Vec<f64> = (0..100)
        .map(|_| {
            let psi = haar_state(2, &mut rng);
            let est = attention_repetition(&psi, 100_000, sic.povm(), &mut rng).map_err(err)?;
            trace_distance(est.estimate.matrix(), &psi.density()).map_err(err)
        })
        .collect::<Result<_, _>>()?;
    distances.sort_by(f64::total_cmp);
    let median = 0.5 * (distances[49] + distances[50]);
    ensure(median < 0.02, || format!("median trace distance {median}"))?;
    // Exact frequencies, as integer counts at 1e15 shots.
    let mut worst = 0.0f64;
    for d in [2, 3] {
        let povm = build_sic(d).map_err(err)?.into_povm();
        for _ in 0..20 {
            let rho = random_density(d, &mut rng);
            let counts = povm.probabilities(&rho).iter().map(|p| (p * 1e15).round() as u64).collect();
            let est = tomography_linear(&povm, &Histogram { counts }).map_err(err)?;
            worst = worst.max(est.estimate.matrix().max_abs_diff(&rho));
        }
    }
    ensure(worst <= 1e-9, || format!("noiseless inversion error {worst:e}"))?;
    Ok(format!("median trace distance {median:.4}, noiseless error {worst:.1e}"))
}

fn dilation() -> Check {
    let mut rng = stream_rng(6, 0);
    let mut worst = 0.0f64;
    for d in [2, 3] {
        for k in 0..50 {
            let n = 1 + k % 4;
            let test = KrausSet::new(random_test(d, d, n, &mut rng)).map_err(err)?;
            let u = dilate(&test, 1e-10).map_err(err)?;
            ensure(u.unitary.is_unitary(1e-10), || format!("d={d}: dilation not unitary"))?;
            for _ in 0..20 {
                let rho = haar_state(d, &mut rng).density();
                for (i, op) in test.operators().iter().enumerate() {
                    let want = op.matmul(&rho).map_err(err)?.matmul(&op.adjoint()).map_err(err)?;
                    worst = worst.max(u.branch(&rho, i).map_err(err)?.max_abs_diff(&want));
                }
            }
        }
    }
    ensure(worst <= 1e-8, || format!("branch error {worst:e}"))?;
    Ok(format!("100 tests × 20 states, max branch error {worst:.1e}"))
}

fn classical() -> Check {
    let mut rng = stream_rng(9, 0);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let (a, b, c) = (1 + k % 4, 1 + (k / 4) % 4, 1 + (k / 16) % 4);
        let (m1, m2) = (random_markov(b, a, &mut rng), random_markov(c, b, &mut rng));
        let both = m1.then(&m2).map_err(err)?;
        for i in 0..c {
            for j in 0..a {
                let paths: f64 = (0..b).map(|k| m2.get(i, k) * m1.get(k, j)).sum();
                worst = worst.max((both.get(i, j) - paths).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("composition error {worst:e}"))?;
    let mut found = Vec::new();
    for d in 2..=4usize {
        let inv = invertible_markov_search(d);
        let fact: usize = (1..=d).product();
        let mut distinct: Vec<Vec<u64>> =
            inv.iter().map(|m| m.data().iter().map(|x| x.to_bits()).collect()).collect();
        distinct.sort();
        distinct.dedup();
        ensure(inv.len() == fact && distinct.len() == fact && inv.iter().all(|m| m.is_permutation()), || {
            format!("d={d}: {} invertible maps, expected {fact} permutations", inv.len())
        })?;
        found.push(format!("{d}!={fact}"));
    }
    Ok(format!("composition error {worst:.1e}; invertible maps {}", found.join(", ")))
}

fn individuation() -> Check {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell = StateVector::from_real(&[s, 0.0, 0.0, s]).map_err(err)?;
    let marginal = DensityMatrix::new(reduced_density(&bell, &SystemShape::qubits(2), &[0]).map_err(err)?).map_err(err)?;
    let p = purity(&marginal);
    ensure((p - 0.5).abs() <= 1e-9, || format!("Bell marginal purity {p}"))?;
    let bell_part = finest_factorization(&bell, &SystemShape::qubits(2)).map_err(err)?;
    ensure(bell_part.blocks == vec![vec![0, 1]], || format!("Bell split as {:?}", bell_part.blocks))?;
    let mut rng = stream_rng(10, 0);
    for _ in 0..20 {
        let psi = haar_state(2, &mut rng).kron(&haar_state(3, &mut rng)).kron(&haar_state(2, &mut rng));
        let f = finest_factorization(&psi, &SystemShape::new(vec![2, 3, 2]).map_err(err)?).map_err(err)?;
        ensure(f.blocks == vec![vec![0], vec![1], vec![2]], || format!("product split as {:?}", f.blocks))?;
    }
    let p = load("merge_split.json");
    let storing = EngineConfig {
        store_states: true,
        ..cfg()
    };
    let want = vec![vec![vec![0], vec![1]], vec![vec![0, 1]], vec![vec![0], vec![1]]];
    for seed in 0..20 {
        let t = run_trajectory(&p, seed, 0, &storing).map_err(err)?;
        let got: Vec<_> = classify_timeline(&t).map_err(err)?.into_iter().map(|m| m.blocks).collect();
        ensure(got == want, || format!("seed {seed}: timeline {got:?}"))?;
    }
    Ok(format!("Bell marginal purity {p:.12}; products split; merge/split timeline exact", p = purity(&marginal)))
}

/// Integer partitions counted by listing nonincreasing sequences, times the
/// `n!` labelings.
fn brute_patterns(n: usize) -> u128 {
    fn parts(n: usize, max: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        (1..=max.min(n)).map(|k| parts(n - k, k)).sum()
    }
    let fact: u128 = (1..=n as u128).product();
    parts(n, n) * fact
}

fn pattern_counts() -> Check {
    for n in 1..=10 {
        let got = count_entanglement_patterns(n).map_err(err)?;
        let want = brute_patterns(n);
        ensure(got == want, || format!("n={n}: {got} vs {want}"))?;
    }
    Ok(format!("n ≤ 10 agree; n=10 gives {}", brute_patterns(10)))
}

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

fn twelve_qubits() -> Check {
    let start = Instant::now();
    let p = unitary_program(12, 5, &mut stream_rng(12, 0));
    let t = run_trajectory(&p, 12, 0, &cfg()).map_err(err)?;
    let elapsed = start.elapsed();
    ensure(t.steps.len() == 5 && !t.aborted, || "trajectory incomplete".into())?;
    ensure((t.final_state.norm_sqr() - 1.0).abs() < 1e-9, || "final state not normalized".into())?;
    within(elapsed, Duration::from_secs(10))?;
    let rss = peak_rss_bytes();
    if let Some(b) = rss {
        ensure(b < 2 << 30, || format!("peak RSS {} MiB", b >> 20))?;
    }
    let rss = rss.map_or("unavailable".into(), |b| format!("{} MiB", b >> 20));
    Ok(format!("5 steps on 12 qubits in {elapsed:.2?}, peak RSS {rss}"))
}

fn determinism() -> Check {
    let eq6 = circuits_dir().join("eq6.circuit");
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_ontic"))
            .args(["--seed", "99", "run", "--trajectories", "1000", "--input", "0"])
            .arg(&eq6)
            .output()
            .map_err(err)
    };
    let (a, b) = (run()?, run()?);
    ensure(a.status.success() && b.status.success(), || String::from_utf8_lossy(&a.stderr).into_owned())?;
    ensure(a.stdout == b.stdout, || "outputs differ".into())?;
    ensure(a.stdout.iter().filter(|&&c| c == b'\n').count() == 1000, || "wrong record count".into())?;
    Ok(format!("two runs, {} identical bytes", a.stdout.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("foliation invariance", foliation_invariance),
        ("history normalization", history_normalization),
        ("sampler matches enumeration", sampler_matches_enumeration),
        ("store-and-recall fidelity bound", fidelity_bound),
        ("SIC frames", sic_frames),
        ("tomography", tomography),
        ("dilation branches", dilation),
        ("classical composition and invertibility", classical),
        ("individuation", individuation),
        ("entanglement pattern counts", pattern_counts),
        ("12-qubit performance", twelve_qubits),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("[PASS] {:>2} {name} ({secs:.2}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {:>2} {name} ({secs:.2}s): {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
