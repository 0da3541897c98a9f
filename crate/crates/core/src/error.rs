use thiserror::Error;

/// Errors raised by the library. Verdicts such as an infeasible LP or a failed
/// online phase are ordinary return values, not errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("request {request} has no admissible source-sink path")]
    NoFeasiblePath { request: usize },

    #[error("no feasible threshold up to {hi}")]
    NoFeasibleTau { hi: f64 },

    #[error("LP solver could not certify feasibility: {0}")]
    NumericalFailure(String),

    #[error("state space exceeded: {states} states explored (limit {limit})")]
    StateSpaceExceeded { states: usize, limit: usize },

    #[error("policy left a reachable state undecided: {0}")]
    IncompletePolicy(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Field {
            field: field.into(),
            message: message.into(),
        }
    }
}
