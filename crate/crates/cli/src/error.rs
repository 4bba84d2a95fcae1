//! CLI failure modes and their process exit codes.
//!
//! Exit codes are part of the scripting contract: 0 success, 2 input
//! validation, 3 numeric non-convergence, 4 capability limits (caps,
//! non-lattice observables). Anything else (I/O) exits 1.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// The description file is not syntactically valid JSON, or violates
    /// the schema shape (unknown fields in strict mode, wrong types).
    #[error("{0}")]
    Parse(String),

    /// Structurally valid input with inconsistent content.
    #[error("{0}")]
    Validation(String),

    /// Propagated library error; carries its own exit-code family.
    #[error(transparent)]
    Core(#[from] sftlab::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Validation(_) => 2,
            CliError::Core(e) => e.exit_code(),
            CliError::Io(_) => 1,
        }
    }
}
