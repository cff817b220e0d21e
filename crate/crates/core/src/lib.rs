//! Quality-centric evaluation of chromatographic datasets.
//!
//! The crate is organised as a pipeline of independent stages:
//!
//! - [`signal`]: peak detection and the four quality measurements (SNR,
//!   retention-time drift, half-height skewness, peak area), plus an EMG
//!   chromatogram synthesizer for fixtures.
//! - [`tabular`]: the per-compound quality table, CSV ingestion, null
//!   filtering, scaling and seeded train/test splits.
//! - [`reduce`]: PCA by symmetric eigendecomposition of the covariance matrix.
//! - [`cluster`]: k-means++ / Lloyd, elbow scan and silhouette analysis.
//! - [`models`]: regression trees, gradient boosting, RBF-kernel SVR,
//!   metrics and grid-search cross-validation.
//! - [`pipeline`]: configuration, orchestration, per-cluster evaluation and
//!   report rendering.

pub mod cluster;
pub mod models;
pub mod pipeline;
pub mod reduce;
pub mod seed;
pub mod signal;
pub mod stats;
pub mod tabular;

pub use cluster::{ElbowCurve, KMeansModel, SilhouetteReport};
pub use models::{MetricPair, ParamGrid};
pub use pipeline::{EvaluationReport, FeedbackSummary, PipelineConfig};
pub use reduce::PcaModel;
pub use signal::{Chromatogram, PeakMetrics, PeakRegion, SyntheticPeakSpec};
pub use tabular::{QualityDataset, QualityRecord};
