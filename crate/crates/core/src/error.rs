use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{divergence}: coordinate {coordinate} = {value} lies outside the divergence domain")]
    DomainViolation {
        divergence: &'static str,
        coordinate: usize,
        value: f64,
    },

    #[error("mahalanobis matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("squared-mahalanobis requires a {0}x{0} matrix")]
    MissingMatrix(usize),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("label {label} at position {index} is out of range for k = {k}")]
    LabelOutOfRange { index: usize, label: usize, k: usize },

    #[error("k = {k} must satisfy 1 <= k < n = {n}")]
    InvalidK { k: usize, n: usize },

    #[error("invalid move: {0}")]
    InvalidMove(String),

    #[error("inconsistent cluster statistics: {0}")]
    InconsistentStats(String),

    #[error("centers are not optimal for the assignment (cluster {cluster}, max deviation {deviation:e})")]
    CentersNotOptimal { cluster: usize, deviation: f64 },

    #[error("brute force over {k}^{n} assignments exceeds the enumeration limit")]
    InstanceTooLarge { n: usize, k: usize },

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),

    #[error("every dimension was dropped by domain filtering")]
    AllDimensionsDropped,

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
