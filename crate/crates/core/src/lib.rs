//! Pure-state ("ontic") circuit simulation over operational probabilistic
//! theories.
//!
//! Circuits are directed acyclic graphs of quantum and classical tests. The
//! engine compiles them along foliations into operator products, samples
//! single-Kraus outcome histories, and enumerates their probabilities.
//! Around it sit measurement tools (POVMs, SIC frames, tomography, the
//! store-and-recall benchmark) and the individuation analysis that tracks
//! how a pure state factorizes over time.
//!
//! ```
//! use ontic_core::{enumerate_histories, parse_program, EngineConfig};
//!
//! let bell = include_str!("../../../circuits/bell.circuit");
//! let program = parse_program(bell).unwrap();
//! let histories = enumerate_histories(&program, &EngineConfig::default()).unwrap();
//! let total: f64 = histories.iter().map(|h| h.probability).sum();
//! assert!((total - 1.0).abs() < 1e-12);
//! ```

pub mod circuit;
pub mod classical;
pub mod engine;
pub mod generate;
pub mod individuation;
pub mod linalg;
pub mod measurement;
pub mod quantum;
pub mod random;

pub use circuit::{
    parse_circuit, parse_document, validate_dag, Circuit, CircuitDoc, CircuitError, ValidationReport, Violation,
};
pub use classical::{
    apply_markov, dephase, embed_classical, invertible_markov_search, ClassicalError, ClassicalState, MarkovMatrix,
};
pub use engine::{
    compile_history, enumerate_histories, foliate, history_probability, parse_program, run_many, run_trajectory,
    sample_step, EngineConfig, EngineError, Foliation, FoliationStrategy, HistoryEntry, Program, Trajectory,
};
pub use individuation::{
    classify_timeline, count_entanglement_patterns, finest_factorization, purity, IndividuationError, MindPartition,
};
pub use linalg::{
    bloch_coordinates, partial_trace, reduced_density, schmidt_decompose, tensor_product, trace_distance,
    ComplexMatrix, LinalgError, StateVector, SystemShape, C64,
};
pub use measurement::{
    attention_repetition, benchmark_memory, build_sic, is_infocomplete, random_vn_qubit, recall_fidelity_bound,
    simulate_measurement, store_recall_cycle, tomography_linear, Histogram, MeasurementError, MemoryBenchmark, Povm,
    RecallStrategy, SicPovm, TomographyResult,
};
pub use quantum::{dilate, epistemic_of, CpMap, DensityMatrix, Dilation, KrausSet, QuantumError};
pub use random::stream_rng;
