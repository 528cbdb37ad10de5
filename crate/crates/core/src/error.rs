use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("|x - y| = {0:e} is below the near-diagonal threshold; use kernel_diag")]
    NearDiagonal(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("step size underflow at r = {r} (step {step:e})")]
    Stiffness { r: f64, step: f64 },
}

impl LabError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::InvalidArgument(_) | LabError::Precondition(_) | LabError::NearDiagonal(_) => 2,
            LabError::Convergence(_) | LabError::Stiffness { .. } => 3,
            LabError::Domain(_) | LabError::Numeric(_) | LabError::Range(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
