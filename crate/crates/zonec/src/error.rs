//! Error types shared across the compiler.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CompileError>;

#[derive(Debug, Error)]
pub enum CompileError {
    /// Malformed or inconsistent input (architecture file, circuit file,
    /// hardware parameters, CLI configuration).
    #[error("input error: {0}")]
    Input(String),

    /// The architecture cannot host the requested circuit (not enough
    /// storage traps, or a Rydberg stage larger than the entanglement zone).
    #[error("capacity error: {0}")]
    Capacity(String),

    /// Replay validation of an emitted program reported violations.
    #[error("validation failed with {0} violation(s)")]
    Validation(usize),

    /// Internal invariant broke; indicates a compiler bug.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CompileError {
    /// Process exit code for the CLI: 2 input, 3 capacity, 4 validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CompileError::Input(_) => 2,
            CompileError::Capacity(_) => 3,
            CompileError::Validation(_) => 4,
            CompileError::Internal(_) => 1,
        }
    }
}
