use alloc::string::String;
use alloc::vec::Vec;

use crate::select::TraceEntry;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dataset needs at least 2 points and 1 dimension, got n={n}, d={d}")]
    TooSmall { n: usize, d: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid labels: {0}")]
    InvalidLabels(String),

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("reference set too small: need at least {required} points, got {got}")]
    RefsetTooSmall { required: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("cluster {0} is empty")]
    EmptyCluster(usize),

    #[error("denominator cut is zero (graph is disconnected across the balanced hyperplane)")]
    ZeroDenominatorCut,

    #[error("node {0} has no path to any labeled node")]
    Unreachable(usize),

    #[error("every k-means restart produced an empty cluster")]
    DegenerateClustering,

    #[error("no feasible grid point for the minimum cluster size")]
    Infeasible { trace: Vec<TraceEntry> },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("degenerate cut: side mass {0:e} is below 1e-6")]
    DegenerateCut(f64),

    #[error("unsupported class count {0} (at most 6)")]
    TooManyClasses(usize),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
}
