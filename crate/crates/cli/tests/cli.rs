use std::path::PathBuf;
use std::process::{Command, Output};

use ontic_core::generate::{random_circuit, RandomCircuitSpec};
use ontic_core::{classify_timeline, parse_program, run_trajectory, stream_rng, EngineConfig};
use serde_json::Value;

fn circuit(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../circuits").join(name)
}

fn ontic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontic")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn validate_exit_codes() {
    let ok = ontic(&["validate", circuit("eq6.circuit").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    assert!(ok.stdout.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let cyclic = dir.path().join("cyclic.circuit");
    std::fs::write(
        &cyclic,
        "sys A : q2\nnode a : A -> A = gate(x)\nnode b : A -> A = gate(x)\nwire a.0 -> b.0\nwire b.0 -> a.0\n",
    )
    .unwrap();
    let bad = ontic(&["validate", cyclic.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("cycle"));

    let missing = ontic(&["validate", dir.path().join("nope.circuit").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));

    let usage = ontic(&["run"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn validate_reports_json_on_request() {
    let o = ontic(&["validate", circuit("bell.circuit").to_str().unwrap(), "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["closed"], Value::Bool(true));
    assert_eq!(v["node_count"], 6);
}

#[test]
fn run_is_byte_identical_for_equal_seeds() {
    let path = circuit("eq6.circuit");
    let args = ["run", path.to_str().unwrap(), "--input", "1", "--trajectories", "200", "--seed", "7"];
    let a = ontic(&args);
    let b = ontic(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 200);
    let other = ontic(&["run", path.to_str().unwrap(), "--input", "1", "--trajectories", "200", "--seed", "8"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn zero_trajectories_is_empty() {
    let o = ontic(&["run", circuit("bell.circuit").to_str().unwrap(), "--trajectories", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

#[test]
fn missing_classical_input_is_a_domain_error() {
    let o = ontic(&["run", circuit("eq6.circuit").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("classical input"));
}

#[test]
fn sampled_frequencies_match_enumeration() {
    let path = circuit("bell.circuit");
    let en = ontic(&["enumerate", path.to_str().unwrap()]);
    let doc: Value = serde_json::from_str(&stdout(&en)).unwrap();
    let exact: Vec<(String, f64)> = doc["histories"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| (h["history"][0]["ma"].as_str().unwrap().to_string() + h["history"][0]["mb"].as_str().unwrap(), h["probability"].as_f64().unwrap()))
        .collect();
    let n = 10_000;
    let run = ontic(&["run", path.to_str().unwrap(), "--trajectories", &n.to_string()]);
    let mut counts = std::collections::HashMap::new();
    for line in stdout(&run).lines() {
        let r: Value = serde_json::from_str(line).unwrap();
        let key = r["outcomes"][0]["ma"].as_str().unwrap().to_string() + r["outcomes"][0]["mb"].as_str().unwrap();
        *counts.entry(key).or_insert(0usize) += 1;
    }
    for (key, p) in exact {
        let got = *counts.get(&key).unwrap_or(&0) as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((got - n as f64 * p).abs() <= 3.0 * sigma + 1e-9, "{key}: {got} vs {p}");
    }
}

#[test]
fn store_states_adds_states() {
    let o = ontic(&["run", circuit("merge_split.json").to_str().unwrap(), "--store-states"]);
    let r: Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(r["states"].as_array().unwrap().len(), 3);
    assert_eq!(r["final_state"].as_array().unwrap().len(), 4);
    let plain = ontic(&["run", circuit("merge_split.json").to_str().unwrap()]);
    assert!(!stdout(&plain).contains("final_state"));
}

#[test]
fn merge_split_timeline() {
    let o = ontic(&["classify", circuit("merge_split.json").to_str().unwrap()]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let parts: Vec<Value> = v.as_array().unwrap().iter().map(|s| s["partition"].clone()).collect();
    assert_eq!(parts, vec![serde_json::json!([[0], [1]]), serde_json::json!([[0, 1]]), serde_json::json!([[0], [1]])]);
}

#[test]
fn local_circuit_keeps_its_partition() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("local.json");
    std::fs::write(
        &path,
        r#"{"name": "local", "circuits": [
            "circuit prep\nsys A : q2\nnode a : -> A = prep(+)\nnode b : -> A = prep(0)",
            "circuit spin\nsys A : q2\nnode u : A -> A = gate(h)\nnode v : A -> A = gate(t)"
          ],
          "steps": [{"circuit": "prep"}, {"circuit": "spin"}, {"circuit": "spin"}]}"#,
    )
    .unwrap();
    let o = ontic(&["classify", path.to_str().unwrap()]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for step in v.as_array().unwrap() {
        assert_eq!(step["partition"], serde_json::json!([[0], [1]]));
    }
}

#[test]
fn classify_matches_library_on_random_circuits() {
    let dir = tempfile::tempdir().unwrap();
    for s in 0..5 {
        let c = random_circuit(&mut stream_rng(500 + s, 0), &RandomCircuitSpec::default());
        let path = dir.path().join(format!("r{s}.json"));
        std::fs::write(&path, c.to_json()).unwrap();
        let o = ontic(&["classify", path.to_str().unwrap(), "--seed", "3"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let cli: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let p = parse_program(&c.to_json()).unwrap();
        let cfg = EngineConfig {
            store_states: true,
            ..EngineConfig::default()
        };
        let lib = classify_timeline(&run_trajectory(&p, 3, 0, &cfg).unwrap()).unwrap();
        assert_eq!(cli.as_array().unwrap().len(), lib.len());
        for (a, b) in cli.as_array().unwrap().iter().zip(&lib) {
            assert_eq!(a["partition"], serde_json::to_value(&b.blocks).unwrap());
        }
    }
}

#[test]
fn bench_memory_csv_and_warnings() {
    let o = ontic(&["bench-memory", "--copies", "1", "--dims", "2,5", "--trials", "2000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("strategy,M,d,trials,mean_fidelity,std_error,bound"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let cov = rows.iter().find(|r| r[0] == "optimal_covariant_qubit").unwrap();
    let bound: f64 = cov[6].parse().unwrap();
    assert!((bound - 2.0 / 3.0).abs() < 1e-15);
    let mean: f64 = cov[4].parse().unwrap();
    assert!((mean - bound).abs() < 0.03);
    let err = stderr(&o);
    assert!(err.contains("warning: skipping optimal_covariant_qubit with M = 1, d = 5"));
    assert!(err.contains("warning: skipping sic_estimate with M = 1, d = 5"));

    let bad = ontic(&["bench-memory", "--strategies", "psychic"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn bench_memory_mean_rises_with_copies() {
    let o = ontic(&[
        "bench-memory",
        "--strategies",
        "optimal_covariant_qubit",
        "--copies",
        "1,2,3,4,5",
        "--trials",
        "20000",
    ]);
    let means: Vec<f64> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(means.len(), 5);
    assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
}

#[test]
fn tomography_command() {
    let o = ontic(&["tomography", "--state", "[[1,0],[0,0]]", "--shots", "100000"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["trace_distance"].as_f64().unwrap() < 0.02);
    let o = ontic(&["tomography", "--povm", "pauli", "--shots", "100000", "--seed", "3"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["counts"].as_object().unwrap().len(), 6);
    assert!(v["trace_distance"].as_f64().unwrap() < 0.02);
    assert_eq!(ontic(&["tomography", "--dim", "4"]).status.code(), Some(2));
}

#[test]
fn foliate_and_convert() {
    let eq6 = circuit("eq6.circuit");
    let o = ontic(&[
        "foliate",
        eq6.to_str().unwrap(),
        "--strategy",
        "given",
        "--groups",
        r#"[["alpha"],["psi","E"],["R","V","C"],["A","B"],["Lambda"]]"#,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["slices"].as_array().unwrap().len(), 6);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eq6.json");
    let c = ontic(&["convert", eq6.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0));
    assert!(c.stdout.is_empty());
    let json = std::fs::read_to_string(&out).unwrap();
    assert_eq!(ontic(&["validate", out.to_str().unwrap()]).status.code(), Some(0));
    // Converting the JSON again is a fixed point.
    let again = ontic(&["convert", out.to_str().unwrap()]);
    assert_eq!(stdout(&again), json);
    let shipped = std::fs::read_to_string(circuit("eq6.json")).unwrap();
    assert_eq!(shipped, json);
}

#[test]
fn pattern_counts() {
    let o = ontic(&["patterns", "4"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["patterns"], 120);
    assert_eq!(ontic(&["patterns", "21"]).status.code(), Some(1));
}
