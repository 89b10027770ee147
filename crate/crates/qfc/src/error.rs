use thiserror::Error;

/// Errors produced by the state algebra, integrators and experiment harness.
#[derive(Error, Debug)]
pub enum QfcError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state blow-up: pre-projection trace {trace:.6} is too far from 1; reduce dt")]
    StateBlowUp { trace: f64 },

    #[error("unnormalized state has nonpositive trace {trace:.3e}")]
    NonPositiveTrace { trace: f64 },

    #[error("state vector is zero")]
    ZeroVector,

    #[error("path coupling weight {index} is zero")]
    ZeroWeight { index: usize },

    #[error("trace has imaginary residue {residual:.3e} above tolerance")]
    ImaginaryResidue { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("theorem hypotheses not met: {0}")]
    HypothesisMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QfcError>;
