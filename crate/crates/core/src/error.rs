use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model:\n{0}")]
    InvalidModel(ValidationReport),

    #[error("invalid density caps: {0}")]
    InvalidConstraint(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid grid specification: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a probability vector: {0}")]
    NotADensity(String),

    #[error("initial density lies outside the safe set: {0}")]
    OutsideSafeSet(String),

    #[error("model has density caps missing; constrained synthesis needs `d`")]
    MissingConstraint,

    /// No decision rule at this epoch keeps every safe density inside the caps.
    #[error(
        "stage LP at epoch {epoch} is infeasible (phase-1 residual {phase_one_residual:.3e}); \
         no randomized decision rule keeps the safe set invariant, consider relaxing d"
    )]
    InfeasibleStage { epoch: usize, phase_one_residual: f64 },

    #[error("stage LP at epoch {epoch} reported an unbounded objective")]
    UnboundedStage { epoch: usize },

    #[error("simplex stalled at epoch {epoch} after {iterations} iterations")]
    SolverStalled { epoch: usize, iterations: usize },

    #[error("projection LP at epoch {epoch} failed: {reason}")]
    Projection { epoch: usize, reason: String },

    #[error("brute-force enumeration needs {policies} policies, above the limit of {limit}")]
    InstanceTooLarge { policies: f64, limit: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
