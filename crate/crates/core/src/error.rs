use thiserror::Error;

/// Errors raised by the q-series layer and everything built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("series does not terminate: no upper parameter of the form q^-n")]
    NotTerminating,

    #[error("denominator pole: lower parameter factor vanishes at term {index}")]
    DenominatorPole { index: usize },

    #[error("series did not converge within {cap} terms")]
    NoConvergence { cap: usize },

    #[error("outside convergence domain: {0}")]
    Domain(String),

    #[error("grid functions belong to different contexts")]
    ContextMismatch,
}

impl QError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        QError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, QError>;
