//! Crate-wide error type.

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operand shapes are incompatible for the named operation.
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// A documented precondition was violated by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An operation that requires at least one element received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A gradient became NaN or infinite; the optimizer step was aborted.
    #[error("non-finite gradient in parameter `{param}`; step aborted")]
    NonFiniteGrad { param: String },

    /// The gradient check could not run (e.g. the closure is not deterministic).
    #[error("gradient check invalid: {0}")]
    CheckInvalid(String),

    /// A text input (dialog file, rules file, config file) failed to parse.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Corpus ingestion found answers that cannot be resolved to candidates.
    #[error("ingestion error: {0}")]
    Ingestion(String),

    /// Checkpoint container is corrupt, truncated or has a bad digest.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Checkpoint is valid but does not match the requested run setup.
    #[error("incompatible checkpoint: {0}")]
    Compatibility(String),

    /// Bad configuration key, value or combination.
    #[error("config error: {0}")]
    Config(String),

    /// A spatial question whose subject was never observed in the log.
    #[error("unanswerable question: {0}")]
    Unanswerable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
