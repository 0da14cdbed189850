use alloc::string::String;

/// Errors produced by ensemble construction, evaluation and estimation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid size: index set must have at least 2 elements, got {0}")]
    InvalidSize(usize),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("covariance not symmetric at ({row}, {col}): {upper} vs {lower}")]
    Asymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("covariance not positive semidefinite: eigenvalue {eigenvalue} below {threshold}")]
    NegativeEigenvalue { eigenvalue: f64, threshold: f64 },

    #[error("degenerate pair ({0}, {1}): d = 0, the canonical distance must separate distinct labels")]
    DegeneratePair(String, String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(&'static str),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("quadrature oracle supports at most {max} indices, got {size}")]
    OracleScale { size: usize, max: usize },

    #[error("quadrature oracle needs at least {min} nodes per dimension, got {nodes}")]
    TooFewNodes { nodes: usize, min: usize },

    #[error("threshold not bracketed below beta_max = {beta_max}: 1 - r = {gap} still above target {target}")]
    UnboundedThreshold { beta_max: f64, gap: f64, target: f64 },

    #[error("regime error: {0}")]
    Regime(&'static str),

    #[error("REM size out of range: n_spins = {0}, expected 1..=16")]
    Scale(usize),

    #[error("empty grid")]
    EmptyGrid,

    #[error("grid not sorted at position {0}")]
    UnsortedGrid(usize),
}

pub type Result<T> = core::result::Result<T, Error>;
