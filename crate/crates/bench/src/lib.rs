//! Fixtures shared by the benchmarks.

use ontic_core::{parse_program, Program};

/// A circuit or program from the repository's `circuits/` directory.
pub fn shipped(name: &str) -> Program {
    let path = format!("{}/../../circuits/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_program(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// The one-step example circuit with its classical input set.
pub fn eq6(input: &str) -> Program {
    shipped("eq6.circuit")
        .with_inputs(&[Some(input.to_string())])
        .expect("eq6 accepts inputs 0, 1 and 2")
}
