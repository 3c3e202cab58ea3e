use thiserror::Error;

/// Errors surfaced by the simulator, the table parser and the pipeline.
///
/// `RetryExhausted` is the only non-fatal-ish variant: callers running many
/// shots tally it per shot and only fail when every shot exhausted its
/// retry budget.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration or misuse of an operation.
    #[error("configuration: {0}")]
    Config(String),

    /// Input data failed validation; `line` is 1-based within the source file.
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    /// Two bit patterns (or a pattern and a register segment) disagree on width.
    #[error("width mismatch: {0}")]
    WidthMismatch(String),

    /// A generic 2x2 gate matrix was not unitary within 1e-10.
    #[error("gate matrix is not unitary within 1e-10")]
    NonUnitary,

    /// A projection onto an outcome of probability zero was requested.
    #[error("impossible branch: {0}")]
    ImpossibleBranch(String),

    /// Post-selection kept failing until the retry budget ran out.
    #[error("post-selection exhausted after {attempts} attempts (P(c0=0) = {p_c0_zero})")]
    RetryExhausted { attempts: u32, p_c0_zero: f64 },

    /// Input is degenerate for the requested computation.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
