use thiserror::Error;

use crate::types::ViolationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset must contain at least one point with at least one coordinate")]
    EmptyDataset,

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid number of clusters {clusters} for {points} points")]
    InvalidClusterCount { clusters: usize, points: usize },

    #[error("temperatures must be strictly positive (t1={t1}, t2={t2})")]
    InvalidTemperature { t1: f64, t2: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("membership constraint violated: {0}")]
    InvalidMembership(ViolationReport),

    #[error("importance weight constraint violated: {0}")]
    InvalidWeights(ViolationReport),

    #[error("cluster {cluster} is degenerate: normalizer underflowed")]
    DegenerateCluster { cluster: usize },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("unknown dataset name `{0}`")]
    UnknownDataset(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
