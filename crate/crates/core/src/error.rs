//! Error type shared by every module of the crate.

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("generator sequence is empty")]
    EmptyGenerators,
    #[error("generator 0 must be real, got imaginary part {0}")]
    NonRealDiagonal(f64),
    #[error("frequency {0} appears more than once")]
    DuplicateFrequency(f64),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("grid resolution {resolution} is below the minimum {minimum}")]
    ResolutionTooCoarse { resolution: usize, minimum: usize },
    #[error("matrix is {rows}x{cols}, expected {expected}x{expected}")]
    SizeMismatch { rows: usize, cols: usize, expected: usize },
    #[error("lag {0} is not covered by the index set")]
    MissingLag(usize),
    #[error("index {index} is outside 1..={dim}")]
    OutOfRange { index: usize, dim: usize },
    #[error("index {0} is listed twice")]
    Duplicate(usize),
    #[error("constructed index set is not a ruler (lag {missing_lag} uncovered)")]
    NotARuler { missing_lag: usize },
    #[error("lag {lag} is outside 0..{dim}")]
    LagOutOfRange { lag: usize, dim: usize },
    #[error("matrix is not positive semidefinite (min eigenvalue {0})")]
    NotPsd(f64),
    #[error("batch contains no samples")]
    EmptyBatch,
    #[error("gamma_0 must be positive, got {0}")]
    NonPositiveGamma0(f64),
    #[error("estimator requires the full ruler")]
    NotFullRuler,
    #[error("invalid quantization spec: {0}")]
    InvalidQuantization(&'static str),
    #[error("sample covariance is singular")]
    SingularRhat,
    #[error("Toeplitz candidate is not positive definite on the ruler")]
    InfeasibleU,
    #[error("number of sources {k} must satisfy 1 <= k < {dim}")]
    KOutOfRange { k: usize, dim: usize },
    #[error("batch stage mismatch: expected {0}")]
    WrongStage(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("eigensolver failed to converge")]
    EigenFailure,
}
