use cmdp_core::CmdpError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {message}\n{context}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
        context: String,
    },

    /// Every problem found in the instance, one line each.
    #[error("invalid instance:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),

    #[error("instance is infeasible: no policy satisfies every constraint")]
    Infeasible,

    #[error("empirical CMDP is infeasible; pass an explicit dual bound to run anyway")]
    EmpiricalInfeasible,

    #[error("strict mode needs a strictly feasible instance, got Slater constant {0}")]
    NotStrictlyFeasible(f64),

    #[error("{0}")]
    Usage(String),

    #[error("cannot write output: {0}")]
    Output(String),

    #[error(transparent)]
    Core(#[from] CmdpError),
}

impl LabError {
    /// Process exit code: 1 for unusable input, 2 for infeasibility, 3 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Io { .. } | LabError::Parse { .. } | LabError::Invalid(_) => 1,
            LabError::Infeasible | LabError::EmpiricalInfeasible | LabError::NotStrictlyFeasible(_) => 2,
            LabError::Usage(_) => 64,
            LabError::Output(_) | LabError::Core(_) => 3,
        }
    }
}
