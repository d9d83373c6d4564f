use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};
use indexmap::IndexMap;
use serde::Serialize;

use ontic_core::circuit::{parse_document, validate_dag_with, Circuit, TRACE_NONINCREASING_TOL};
use ontic_core::engine::{parse_program_with, FoliationStrategy, Program};
use ontic_core::individuation::partition_count;
use ontic_core::measurement::{to_csv, von_neumann_along};
use ontic_core::random::haar_state;
use ontic_core::{
    build_sic, classify_timeline, count_entanglement_patterns, enumerate_histories, foliate, run_many,
    run_trajectory, simulate_measurement, stream_rng, tomography_linear, trace_distance, EngineConfig,
    MemoryBenchmark, Povm, RecallStrategy, StateVector,
};

use crate::output::{self, float, to_line, to_pretty};
use crate::{Cli, Command, Format, Global, PovmKind, StrategyKind};

/// An error and the exit status it maps to.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome<T = ()> = Result<T, Failure>;

fn domain(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 1, error: e.into() }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: e.into() }
}

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(usage)
}

/// Writes the data stream; I/O failures map to exit status 2.
fn emit(g: &Global, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Outcome {
    let mut sink = output::sink(g.out.as_deref())
        .with_context(|| "cannot open output")
        .map_err(usage)?;
    write(&mut sink)
        .and_then(|_| sink.flush())
        .context("cannot write output")
        .map_err(usage)
}

fn tolerance(g: &Global) -> f64 {
    g.tolerance.unwrap_or(TRACE_NONINCREASING_TOL)
}

fn is_program(text: &str) -> bool {
    text.trim_start().starts_with('{')
        && serde_json::from_str::<serde_json::Value>(text).is_ok_and(|v| v.get("circuits").is_some())
}

fn load_program(g: &Global, path: &Path, input: Option<&str>) -> Outcome<Program> {
    let text = read(path)?;
    let p = parse_program_with(&text, tolerance(g)).map_err(domain)?;
    match input {
        None => Ok(p),
        Some(x) => {
            let inputs: Vec<Option<String>> = (0..p.steps().len())
                .map(|t| {
                    if p.circuit(t).uses_classical_input() {
                        Some(x.to_string())
                    } else {
                        p.steps()[t].input.clone()
                    }
                })
                .collect();
            p.with_inputs(&inputs).map_err(domain)
        }
    }
}

fn load_circuit(g: &Global, path: &Path) -> Outcome<Circuit> {
    let text = read(path)?;
    if is_program(&text) {
        return Err(usage(anyhow!("{} is a program; this command takes a single circuit", path.display())));
    }
    let doc = parse_document(&text).map_err(domain)?;
    Circuit::from_doc_with(doc, tolerance(g)).map_err(domain)
}

fn config(g: &Global, store_states: bool) -> EngineConfig {
    EngineConfig {
        max_dim: g.max_dim,
        store_states,
        ..EngineConfig::default()
    }
}

pub fn dispatch(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { path } => validate(g, path),
        Command::Run {
            path,
            trajectories,
            store_states,
            input,
        } => run(g, path, *trajectories, *store_states, input.as_deref()),
        Command::Enumerate { path, input, cap } => enumerate(g, path, input.as_deref(), *cap),
        Command::BenchMemory {
            copies,
            dims,
            strategies,
            trials,
        } => bench_memory(g, copies, dims, strategies, *trials),
        Command::Classify { path, input, trajectory } => classify(g, path, input.as_deref(), *trajectory),
        Command::Tomography { dim, shots, povm, state } => tomography(g, *dim, *shots, *povm, state.as_deref()),
        Command::Foliate { path, strategy, groups } => foliation(g, path, *strategy, groups.as_deref()),
        Command::Convert { path } => convert(g, path),
        Command::Patterns { n } => patterns(g, *n),
    }
}

fn validate(g: &Global, path: &Path) -> Outcome {
    let text = read(path)?;
    if is_program(&text) {
        let p = parse_program_with(&text, tolerance(g)).map_err(domain)?;
        eprintln!("program `{}`: OK, {} step(s)", p.name(), p.steps().len());
        return Ok(());
    }
    let doc = parse_document(&text).map_err(domain)?;
    let report = validate_dag_with(&doc, tolerance(g));
    eprint!("{report}");
    if g.format == Some(Format::Json) {
        emit(g, |w| w.write_all(to_pretty(&report).as_bytes()))?;
    }
    if report.is_ok() {
        Ok(())
    } else {
        Err(domain(anyhow!("{} violation(s) in {}", report.violations.len(), path.display())))
    }
}

#[derive(Serialize)]
struct RunRecord<'a> {
    seed: u64,
    trajectory: u64,
    outcomes: Vec<&'a IndexMap<String, String>>,
    probability: f64,
    aborted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    states: Option<Vec<Option<&'a StateVector>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_state: Option<&'a StateVector>,
}

fn run(g: &Global, path: &Path, n: usize, store_states: bool, input: Option<&str>) -> Outcome {
    let p = load_program(g, path, input)?;
    let trajectories = run_many(&p, g.seed, n, &config(g, store_states)).map_err(domain)?;
    let records: Vec<RunRecord> = trajectories
        .iter()
        .map(|t| RunRecord {
            seed: t.seed,
            trajectory: t.stream,
            outcomes: t.steps.iter().map(|s| &s.outcomes).collect(),
            probability: t.probability,
            aborted: t.aborted,
            states: store_states.then(|| t.steps.iter().map(|s| s.state.as_ref()).collect()),
            final_state: store_states.then_some(&t.final_state),
        })
        .collect();
    match g.format.unwrap_or(Format::Jsonl) {
        Format::Jsonl => emit(g, |w| {
            for r in &records {
                writeln!(w, "{}", to_line(r))?;
            }
            Ok(())
        }),
        Format::Json => emit(g, |w| w.write_all(to_pretty(&records).as_bytes())),
        Format::Csv => Err(usage(anyhow!("run writes json or jsonl"))),
    }
}

/// Node label to outcome label per step, in topological order.
fn labelled(p: &Program, history: &[Vec<usize>]) -> Vec<IndexMap<String, String>> {
    history
        .iter()
        .enumerate()
        .map(|(t, events)| {
            let c = p.circuit(t);
            c.topological_order()
                .iter()
                .map(|&n| (c.node(n).label.clone(), c.node(n).events[events[n]].outcome.clone()))
                .collect()
        })
        .collect()
}

#[derive(Serialize)]
struct EnumEntry {
    history: Vec<IndexMap<String, String>>,
    probability: f64,
}

#[derive(Serialize)]
struct Enumeration<'a> {
    name: &'a str,
    count: usize,
    total: f64,
    histories: Vec<EnumEntry>,
}

fn enumerate(g: &Global, path: &Path, input: Option<&str>, cap: usize) -> Outcome {
    let p = load_program(g, path, input)?;
    let cfg = EngineConfig {
        history_cap: cap,
        ..config(g, false)
    };
    let entries = enumerate_histories(&p, &cfg).map_err(domain)?;
    let histories: Vec<EnumEntry> = entries
        .iter()
        .map(|h| EnumEntry {
            history: labelled(&p, &h.history),
            probability: h.probability,
        })
        .collect();
    let total = entries.iter().map(|h| h.probability).sum();
    eprintln!("{} histories, total probability {}", histories.len(), float(total));
    match g.format.unwrap_or(Format::Json) {
        Format::Json => emit(g, |w| {
            let doc = Enumeration {
                name: p.name(),
                count: histories.len(),
                total,
                histories,
            };
            w.write_all(to_pretty(&doc).as_bytes())
        }),
        Format::Csv => emit(g, |w| {
            writeln!(w, "history,probability")?;
            for h in &histories {
                let steps: Vec<String> = h
                    .history
                    .iter()
                    .map(|m| m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" "))
                    .collect();
                writeln!(w, "{},{}", steps.join(" | "), float(h.probability))?;
            }
            Ok(())
        }),
        Format::Jsonl => emit(g, |w| {
            for h in &histories {
                writeln!(w, "{}", to_line(h))?;
            }
            Ok(())
        }),
    }
}

fn bench_memory(g: &Global, copies: &[usize], dims: &[usize], names: &[String], trials: usize) -> Outcome {
    let strategies = if names.is_empty() {
        RecallStrategy::ALL.to_vec()
    } else {
        names
            .iter()
            .map(|s| s.parse::<RecallStrategy>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?
    };
    if copies.contains(&0) || dims.iter().any(|&d| d < 2) {
        return Err(usage(anyhow!("copies must be ≥ 1 and dimensions ≥ 2")));
    }
    let cfg = MemoryBenchmark {
        strategies,
        copies: copies.to_vec(),
        dims: dims.to_vec(),
        trials,
        seed: g.seed,
    };
    let (rows, warnings) = ontic_core::benchmark_memory(&cfg).map_err(domain)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    match g.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(g, |w| w.write_all(to_csv(&rows).as_bytes())),
        Format::Json => emit(g, |w| w.write_all(to_pretty(&rows).as_bytes())),
        Format::Jsonl => emit(g, |w| {
            for r in &rows {
                writeln!(w, "{}", to_line(r))?;
            }
            Ok(())
        }),
    }
}

fn classify(g: &Global, path: &Path, input: Option<&str>, trajectory: u64) -> Outcome {
    let p = load_program(g, path, input)?;
    let t = run_trajectory(&p, g.seed, trajectory, &config(g, true)).map_err(domain)?;
    let timeline = classify_timeline(&t).map_err(domain)?;
    emit(g, |w| w.write_all(to_pretty(&timeline).as_bytes()))
}

#[derive(Serialize)]
struct TomographyReport<'a> {
    dim: usize,
    povm: &'a str,
    shots: u64,
    state: &'a StateVector,
    counts: ontic_core::Histogram,
    estimate: ontic_core::DensityMatrix,
    residual: f64,
    trace_distance: f64,
}

fn tomography(g: &Global, dim: usize, shots: u64, kind: PovmKind, state: Option<&str>) -> Outcome {
    let mut rng = stream_rng(g.seed, 0);
    let (povm, name): (Povm, &str) = match kind {
        PovmKind::Sic => (build_sic(dim).map_err(usage)?.into_povm(), "sic"),
        PovmKind::Pauli if dim == 2 => {
            let parts: Vec<Povm> = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
                .into_iter()
                .map(von_neumann_along)
                .collect();
            (Povm::mixture(&parts).map_err(domain)?, "pauli")
        }
        PovmKind::Pauli => return Err(usage(anyhow!("the Pauli POVM is defined for qubits only"))),
    };
    let psi = match state {
        Some(s) => serde_json::from_str::<StateVector>(s)
            .context("state must be a JSON list of [re, im] pairs")
            .map_err(usage)?
            .normalized()
            .map_err(domain)?,
        None => haar_state(dim, &mut rng),
    };
    if psi.dim() != dim {
        return Err(usage(anyhow!("state has dimension {}, expected {dim}", psi.dim())));
    }
    let counts = simulate_measurement(&povm, &psi.density(), shots, &mut rng);
    let result = tomography_linear(&povm, &counts).map_err(domain)?;
    let dist = trace_distance(result.estimate.matrix(), &psi.density()).map_err(domain)?;
    let report = TomographyReport {
        dim,
        povm: name,
        shots,
        state: &psi,
        counts,
        estimate: result.estimate,
        residual: result.residual,
        trace_distance: dist,
    };
    emit(g, |w| w.write_all(to_pretty(&report).as_bytes()))
}

#[derive(Serialize)]
struct FoliationReport<'a> {
    circuit: &'a str,
    strategy: &'static str,
    groups: Vec<Vec<String>>,
    slices: Vec<Vec<String>>,
    leaves: Vec<Vec<String>>,
}

fn foliation(g: &Global, path: &Path, kind: StrategyKind, groups: Option<&str>) -> Outcome {
    let c = load_circuit(g, path)?;
    let strategy = match kind {
        StrategyKind::Asap => FoliationStrategy::Asap,
        StrategyKind::Alap => FoliationStrategy::Alap,
        StrategyKind::Random => FoliationStrategy::Random(g.seed),
        StrategyKind::Given => {
            let text = groups.ok_or_else(|| usage(anyhow!("--strategy given needs --groups")))?;
            FoliationStrategy::Given(
                serde_json::from_str(text)
                    .context("groups must be a JSON list of lists of node labels")
                    .map_err(usage)?,
            )
        }
    };
    let f = foliate(&c, &strategy).map_err(domain)?;
    let report = FoliationReport {
        circuit: c.name(),
        strategy: match kind {
            StrategyKind::Asap => "asap",
            StrategyKind::Alap => "alap",
            StrategyKind::Random => "random",
            StrategyKind::Given => "given",
        },
        groups: f.group_labels(&c),
        slices: f.slice_labels(&c),
        leaves: f.leaf_systems(),
    };
    emit(g, |w| w.write_all(to_pretty(&report).as_bytes()))
}

fn convert(g: &Global, path: &Path) -> Outcome {
    let c = load_circuit(g, path)?;
    emit(g, |w| w.write_all(c.to_json().as_bytes()))
}

#[derive(Serialize)]
struct Patterns {
    n: usize,
    partitions: u128,
    patterns: u128,
}

fn patterns(g: &Global, n: usize) -> Outcome {
    let patterns = count_entanglement_patterns(n).map_err(domain)?;
    let doc = Patterns {
        n,
        partitions: partition_count(n),
        patterns,
    };
    emit(g, |w| w.write_all(to_pretty(&doc).as_bytes()))
}
