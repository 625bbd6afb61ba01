use thiserror::Error;

/// Errors raised by the numerical kernels, detectors, and calibration routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {index} = {pivot:e}")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error(
        "matrix is not Hermitian: max |M_ij - conj(M_ji)| = {asymmetry:e} exceeds {tolerance:e}"
    )]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    #[error("vector norm {norm:e} is below the zero-vector floor")]
    ZeroVector { norm: f64 },

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("degenerate steering vector: v^H S^-1 v = {0:e}")]
    DegenerateSteering(f64),

    #[error("invalid zeta = {0}: (K+1)(1+eps)/N must exceed 1")]
    InvalidZeta(f64),

    #[error("design vector is parallel to the steering vector after whitening")]
    ParallelUV,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("root bracketing failed: {0}")]
    RootBracketFailure(String),

    #[error("non-monotone false-alarm curve detected: {0}")]
    NonMonotoneDetected(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// Name of the module family that owns this error, used when reporting
    /// failures from the verification suite.
    pub fn module(&self) -> &'static str {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::NotHermitian { .. }
            | Error::DimensionMismatch { .. }
            | Error::NumericalInconsistency(_)
            | Error::ZeroVector { .. }
            | Error::NonFinite(_) => "linalg_core",
            Error::DegenerateSteering(_) | Error::InvalidZeta(_) | Error::ParallelUV => "detectors",
            Error::Domain(_) | Error::RootBracketFailure(_) | Error::NonMonotoneDetected(_) => {
                "calibration"
            }
            Error::InvalidParameter(_) => "scenario",
            Error::Config(_) => "cli",
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParameter(_) | Error::Config(_) | Error::DimensionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
