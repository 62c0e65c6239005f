//! Constraint-commuting driver terms, diffusor mixers and a statevector QAOA
//! engine for exactly-one (1-in-3) SAT.
//!
//! The pipeline runs constraints → commuting terms → generator groups →
//! diffusor programs → simulation. Each stage lives in its own module.

pub mod commutator_search;
pub mod constraints;
pub mod error;
pub mod generator_reduction;
pub mod mixer_compile;
pub mod qaoa_engine;
pub mod quad_condition;
pub mod sat1in3;
pub mod term_algebra;
pub mod train_bench;

pub use error::{Error, Result};

/// Largest qubit count for dense matrix lowering.
pub const MAX_LOWER_QUBITS: usize = 12;
/// Largest qubit count for dense commutator oracles.
pub const MAX_ORACLE_QUBITS: usize = 10;
/// Largest variable count for exhaustive enumeration and statevectors.
pub const MAX_ENUM_QUBITS: usize = 26;

/// Derives an independent 64-bit seed from a base seed and a stream index.
pub fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
