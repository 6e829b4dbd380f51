use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("combinatorial dimension overflows for d_R={d_r}, d_Z={d_z}")]
    Overflow { d_r: usize, d_z: usize },

    #[error("simplex exceeded {pivots} pivots without converging")]
    PivotLimit { pivots: usize },

    #[error("feasible region contains a line along which the objective is constant")]
    NoVertex,

    #[error("branch-and-bound node limit {limit} reached (incumbent objective: {incumbent:?})")]
    NodeLimit {
        limit: usize,
        incumbent: Option<f64>,
        incumbent_x: Option<Vec<f64>>,
    },

    #[error("subproblem unexpectedly {0}")]
    Subproblem(&'static str),

    #[error("iteration limit {0} reached without a feasible candidate")]
    IterationLimit(usize),

    #[error("training diverged at step {step}: loss is {loss}")]
    Divergence { step: usize, loss: f64 },

    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension {
            what,
            expected,
            got,
        }
    }
}
