use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Level and point indices are zero-based in the fields and one-based in the
/// rendered messages.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("iteration budget exhausted after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error(
        "points p[{},{}] and p[{},{}] collide",
        .level + 1, .index + 1, .other_level + 1, .other_index + 1
    )]
    CollidingPoints {
        level: usize,
        index: usize,
        other_level: usize,
        other_index: usize,
    },

    #[error("level polynomials have a repeated root near {re} {im:+}i")]
    RepeatedRoot { re: f64, im: f64 },

    #[error("no starting point converged to a solution")]
    NoSolutionsFound,

    #[error("polynomial must be nonzero with degree at least 1")]
    DegenerateInput,

    #[error("invalid configuration type: {0}")]
    InvalidType(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("the Q polynomial needs at least two levels (got {0})")]
    UnsupportedLevelCount(usize),

    #[error("singular linear system")]
    Singular,

    /// Unparseable input; `line` and `column` are one-based, zero if unknown.
    #[error("malformed input at line {line}, column {column}: {message}")]
    Malformed {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
