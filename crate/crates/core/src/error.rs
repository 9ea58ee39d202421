use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid deadline {0}: must be finite and strictly positive")]
    InvalidDeadline(f64),

    #[error("invalid bit target {0}: must be finite and nonnegative")]
    InvalidBitTarget(f64),

    /// The target is at or above `r'(0) * total energy`, the supremum of what
    /// any schedule can depart no matter how long it runs.
    #[error("bit target {target} is unreachable: every schedule departs less than {bound} bits")]
    UnreachableBitTarget { target: f64, bound: f64 },

    /// A solver-internal guarantee failed. Indicates a defect, never a valid outcome.
    #[error("algorithm invariant violated: {0}")]
    AlgorithmInvariantViolated(String),

    #[error("brute-force oracle limited to {max} epochs, scenario has {epochs}")]
    OracleTooExpensive { epochs: usize, max: usize },

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownName {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::AlgorithmInvariantViolated(msg.into())
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}
