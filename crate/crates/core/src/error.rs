use alloc::string::String;

/// Errors produced by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two operands have incompatible shapes.
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        /// Operation that rejected the operands.
        op: &'static str,
        /// `(rows, cols)` of the left operand.
        left: (usize, usize),
        /// `(rows, cols)` of the right operand.
        right: (usize, usize),
    },
    /// Invalid model, data or training configuration.
    #[error("config error: {0}")]
    Config(String),
    /// Malformed text input.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        /// 1-based line number (0 when the caller did not supply one).
        line: usize,
        /// 1-based column of the offending token.
        column: usize,
        /// Description of the problem.
        message: String,
    },
    /// A value violates a structural invariant (e.g. not a permutation).
    #[error("validation error: {0}")]
    Validation(String),
    /// Requested size exceeds what an operation supports.
    #[error("capacity exceeded: {what} is {got}, limit {limit}")]
    Capacity {
        /// Quantity that is too large.
        what: &'static str,
        /// Requested size.
        got: usize,
        /// Largest supported size.
        limit: usize,
    },
    /// A NaN or infinity appeared where a finite value is required.
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}, step {step}")]
    Diverged {
        /// 0-based epoch.
        epoch: usize,
        /// 0-based optimizer step within the run.
        step: usize,
    },
}

/// Result alias using the crate [`Error`].
pub type Result<T> = core::result::Result<T, Error>;
