//! End-to-end evaluation: load, split, scale, project, cluster, model each
//! cluster, summarise and report.
//!
//! Every stage is a public function so a run can be reproduced by hand; the
//! seeds each stage receives are derived from the master seed as described
//! in [`run`].

mod config;
mod evaluate;
mod feedback;
mod report;
mod run;
mod stats;
pub mod synthetic;

pub use config::{
    Auto, ChromatogramSpec, ClusterSpace, ClusteringConfig, Components, DataConfig, FeatureConfig,
    ModelConfig, PcaConfig, PipelineConfig, ScalingConfig, SplitConfig, SynthConfig,
};
pub use evaluate::{
    evaluate_per_cluster, min_cluster_size, report_metrics, ClusterModel, ClusterStatus,
    PerClusterEvaluation, SHARED_CV_INDEX,
};
pub use feedback::{rank_clusters, Characteristic, ClusterFeedback, Direction, FeedbackSummary};
pub use report::{
    cv_scores_csv, elbow_csv, emit_report, labels_csv, metrics_csv, metrics_markdown,
    render_markdown, silhouette_csv, stats_csv, stats_markdown, ClusterReport, EvaluationReport,
    Assignment, KSilhouette, KSource, OutputFormat, Part, Provenance, RowCounts, RunOutput,
};
pub use run::{
    choose_k, cluster_stage, load_stage, project_stage, run_pipeline, scale_stage, split_stage,
    Clustering, LoadedData, Projection, ScaledData,
};
pub use stats::{cluster_stats, ClusterStats, ColumnStats, Summary, STATS_COLUMNS, STAT_ROWS};

use std::fmt::Display;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{stage} stage failed: {cause}")]
    Stage { stage: &'static str, cause: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    pub fn stage(stage: &'static str, cause: impl Display) -> Self {
        Self::Stage {
            stage,
            cause: cause.to_string(),
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
