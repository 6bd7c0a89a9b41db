use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("non-positive diagonal entry {value} at index {index}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("oracle has no subgradient")]
    NoSubgradient,

    #[error("oracle has no quadratic model")]
    NoQuadraticModel,

    #[error("prox produced a non-finite value")]
    ProxDiverged,

    #[error("alpha {0} is outside (0, 1)")]
    AlphaOutOfRange(f64),

    #[error("douglas-rachford bound requires alpha")]
    MissingAlpha,

    #[error("difference operator needs m >= 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("empty run: zero iterations requested")]
    EmptyRun,

    #[error("{segments} segments exceed signal length {m}")]
    SegmentsExceedLength { segments: usize, m: usize },

    #[error("trace has no stored iterates")]
    MissingIterates,

    #[error("invalid sigma pair ({lb}, {ub})")]
    InvalidSigmaPair { lb: f64, ub: f64 },

    #[error("invalid parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("unsupported: {0}")]
    Unsupported(&'static str),
}
