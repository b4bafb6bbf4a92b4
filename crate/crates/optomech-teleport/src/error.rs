use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by state construction and by the numerical contracts of the
/// Gaussian operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state must have at least one mode")]
    EmptyState,

    #[error("mean occupation must be nonnegative, got {0}")]
    NegativeOccupation(f64),

    #[error("mode index {mode} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { mode: usize, n_modes: usize },

    #[error("expected a {expected}-mode state, got {got} modes")]
    WrongModeCount { expected: usize, got: usize },

    #[error("matrix dimension {got} does not match state dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix is not symmetric (max asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not symplectic (defect {defect:.3e})")]
    NotSymplectic { defect: f64 },

    #[error("conditioning matrix is singular; the input state is corrupted")]
    SingularConditioning,

    #[error("state is not pure (smallest symplectic eigenvalue {nu})")]
    NotPure { nu: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("state lies outside the extractable Gaussian family (residual {0:.3e})")]
    ExtractionResidual(f64),

    #[error("fidelity bracket fell below -1 ({0}); upstream conventions are inconsistent")]
    UnphysicalBracket(f64),

    #[error("partial trace requires a nonempty list of distinct modes")]
    BadKeepList,

    #[error("nonfinite value encountered in {0}")]
    NonFinite(String),
}
