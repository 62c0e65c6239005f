use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bitmasks overlap or exceed {n} qubits")]
    MaskOverlap { n: usize },
    #[error("{what}: n = {n} exceeds the cap of {cap}")]
    CapExceeded { what: &'static str, n: usize, cap: usize },
    #[error("empty ladder pattern (v and w both zero)")]
    EmptyPattern,
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("index {index} out of range for {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-finite objective value")]
    NonFinite,
    #[error("degenerate fit input: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_cap(what: &'static str, n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::CapExceeded { what, n, cap })
    } else {
        Ok(())
    }
}
