//! Crate-wide error type.
//!
//! Errors fall into three families, which the CLI maps onto exit codes:
//! validation of inputs (exit 2), numeric non-convergence (exit 3), and
//! capability limits such as caps or non-lattice observables (exit 4).

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A symbol has no admissible successor or predecessor.
    #[error("transition matrix row or column {index} is empty (symbol {symbol} is stranded)")]
    RowOrColumnEmpty { index: usize, symbol: usize },

    /// Malformed construction input (wrong sizes, non-0/1 entries, missing values, ...).
    #[error("invalid input: {0}")]
    Validation(String),

    /// Word enumeration would exceed the configured cap.
    #[error("enumerating words of length {n} would produce {count} words, above the cap {cap}")]
    LengthTooLarge { n: usize, count: u128, cap: u128 },

    /// Periodic-point enumeration would exceed the configured cap.
    #[error("periodic points up to period {max_period} number {count}, above the cap {cap}")]
    PeriodTooLarge {
        max_period: usize,
        count: u128,
        cap: u128,
    },

    /// A word is shorter than an evaluation needs.
    #[error("word of length {len} is too short: need at least {needed} symbols")]
    WordTooShort { len: usize, needed: usize },

    /// Higher-block recoding would exceed the block-alphabet cap.
    #[error("block alphabet would have {count} blocks, above the cap {cap}")]
    BlockAlphabetTooLarge { count: usize, cap: usize },

    /// A potential or observable has range above what an operation accepts.
    #[error("function range {range} exceeds the supported range {max} here")]
    RangeTooLarge { range: usize, max: usize },

    /// The block transition matrix is not primitive (some power never all-positive).
    #[error("block transition matrix is not primitive; spectral solve requires mixing")]
    NotPrimitive,

    /// An iterative solve missed its residual target.
    #[error("{what} did not reach residual {target:.1e} within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        target: f64,
        iterations: usize,
    },

    /// A cylinder enumeration needed by a check exceeds the cap.
    #[error("cylinder enumeration at length {n} exceeds the cap {cap}")]
    EnumerationCap { n: usize, cap: u128 },

    /// A linear system was singular beyond tolerance (signals non-mixing input).
    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    /// Mixing-coefficient depth produces too many atoms to enumerate.
    #[error("depth {depth} produces {atoms} cylinder atoms, above the cap {cap}")]
    DepthTooLarge {
        depth: usize,
        atoms: usize,
        cap: usize,
    },

    /// Observable is not lattice-valued within the snapping tolerance.
    #[error("observable is not lattice-valued up to denominator {q_max}; exact DP unavailable")]
    NonLattice { q_max: u64 },

    /// Exact-distribution table would exceed the memory cap.
    #[error("distribution table needs {cells} cells, above the cap {cap}")]
    MemoryCap { cells: u128, cap: u128 },

    /// An operation that divides by sigma received sigma <= 0.
    #[error("sigma = {sigma} is not positive; statistic undefined")]
    DegenerateSigma { sigma: f64 },

    /// A tail window contains no lattice atoms with positive probability.
    #[error("window [{lo}, {hi}] carries zero probability at n = {n}")]
    ZeroProbability { lo: f64, hi: f64, n: usize },

    /// Rate-function query outside the achievable interval.
    #[error("a = {a} is outside the achievable interval [{a_min}, {a_max}]")]
    OutOfDomain { a: f64, a_min: f64, a_max: f64 },

    /// A level-2 candidate puts mass on a forbidden transition.
    #[error("candidate measure uses forbidden transition {from} -> {to}")]
    UnsupportedTransition { from: usize, to: usize },

    /// A named observable is absent from the system description.
    #[error("unknown observable {0:?}")]
    UnknownObservable(String),
}

/// Exit-code families for the CLI: 2 validation, 3 non-convergence, 4 capability.
impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::RowOrColumnEmpty { .. }
            | Error::Validation(_)
            | Error::WordTooShort { .. }
            | Error::RangeTooLarge { .. }
            | Error::DegenerateSigma { .. }
            | Error::OutOfDomain { .. }
            | Error::UnsupportedTransition { .. }
            | Error::UnknownObservable(_) => 2,
            Error::NoConvergence { .. } | Error::SolveFailure(_) | Error::NotPrimitive => 3,
            Error::LengthTooLarge { .. }
            | Error::PeriodTooLarge { .. }
            | Error::BlockAlphabetTooLarge { .. }
            | Error::EnumerationCap { .. }
            | Error::DepthTooLarge { .. }
            | Error::NonLattice { .. }
            | Error::MemoryCap { .. }
            | Error::ZeroProbability { .. } => 4,
        }
    }
}
