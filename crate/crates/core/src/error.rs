use thiserror::Error;

pub type Result<T> = std::result::Result<T, CmdpError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmdpError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("mixture policy has no components")]
    EmptyMixture,

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        size: usize,
    },

    #[error("linear system is singular")]
    Singular,

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("value iteration did not converge within {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
}

impl CmdpError {
    pub(crate) fn mismatch(what: impl Into<String>, expected: usize, found: usize) -> Self {
        CmdpError::DimensionMismatch {
            what: what.into(),
            expected,
            found,
        }
    }

    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        CmdpError::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
