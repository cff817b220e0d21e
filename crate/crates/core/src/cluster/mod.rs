//! Partitional clustering: k-means++ seeding, Lloyd iterations, elbow scan
//! and silhouette analysis.

mod elbow;
mod kmeans;
mod silhouette;

pub use elbow::{elbow_scan, select_elbow, ElbowCurve, ElbowScan, ElbowSelection};
pub use kmeans::{
    assign, assign_to, kmeans_fit, kmeans_plus_plus, lloyd, KMeansModel, KMeansParams, LloydRun,
};
pub use silhouette::{silhouette, SilhouetteReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("k = {k} needs at least {k} samples, got {n}")]
    TooFewSamples { k: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("labels ({labels}) do not match sample count ({samples})")]
    LabelMismatch { labels: usize, samples: usize },
}

pub type Result<T, E = ClusterError> = std::result::Result<T, E>;

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
