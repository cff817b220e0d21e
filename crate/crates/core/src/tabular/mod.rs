//! The per-compound quality table.

mod record;
mod scaling;
mod split;

pub use record::{
    drop_nulls, feature_matrix, feature_matrix_with, load_csv, read_csv, write_csv, FeatureMatrix,
    FeatureSet, QualityDataset, QualityRecord, COLUMNS, FEATURES, NULL_MARKERS, TARGET,
};
pub use scaling::{normalize, standardize, MinMaxParams, Normalized, ScalingParams, ZScoreParams};
pub use split::{split_indices, split_train_test};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("missing required column `{0}`")]
    SchemaMismatch(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}`")]
    ParseError {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column `{column}`: {reason}")]
    InvalidValue {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("row {row}, column `{column}` is null")]
    NullValue { row: usize, column: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("feature `{0}` is not available")]
    MissingFeature(String),
    #[error("feature `{0}` has zero variance")]
    ZeroVarianceFeature(String),
    #[error("feature `{0}` has a degenerate range (max == min)")]
    DegenerateRange(String),
    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = TabularError> = std::result::Result<T, E>;
