use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("penalty parameter must be positive, got {0}")]
    NonPositivePenalty(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schedule incompatible with learner: beta * tau = {product} must be < 1 (beta = {beta}, tau = {tau})")]
    ScheduleIncompatible { beta: f64, tau: f64, product: f64 },

    #[error("inner solve at epoch {epoch} needs {required} iterations, cap is {cap}")]
    InnerBudgetExceeded { epoch: usize, required: u64, cap: u64 },

    #[error("series does not converge: {0}")]
    DivergentSeries(&'static str),

    #[error("rate estimation failed: {0}")]
    EstimationFailed(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown {kind} strategy '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("learner channel closed")]
    LearnerDisconnected,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by a bad configuration rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_)
                | Error::ScheduleIncompatible { .. }
                | Error::UnknownStrategy { .. }
                | Error::NonPositivePenalty(_)
                | Error::DivergentSeries(_)
                | Error::Json(_)
        )
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
