//! Regression models and their tuning.
//!
//! - [`fit_tree`]: best-first least-squares regression tree.
//! - [`fit_gb`]: gradient boosting on squared error with those trees.
//! - [`fit_svr`]: epsilon-insensitive support vector regression with an RBF
//!   kernel, solved by SMO with maximal-violating-pair selection.
//! - [`grid_search`]: exhaustive search with seeded k-fold cross-validation.

mod gb;
mod grid;
mod metrics;
mod svr;
mod tree;

pub use gb::{fit_gb, GbParams, GradientBoostRegressor};
pub use grid::{
    grid_search, kfold_indices, linspace, CvScore, FittedModel, GridSearchResult, ModelFamily,
    ModelParams, ParamGrid,
};
pub use metrics::{r_squared, rmse, MetricPair};
pub use svr::{fit_svr, SvrModel, SvrParams, SVR_MAX_ITER, SVR_TOL};
pub use tree::{fit_tree, DecisionTreeRegressor, TreeNode};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("r-squared is undefined for a constant target")]
    ZeroVarianceTarget,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("every grid combination failed; first error: {0}")]
    AllCombinationsFailed(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

pub(crate) fn check_xy(x: &ndarray::ArrayView2<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(ModelError::LengthMismatch(x.nrows(), y.len()));
    }
    if y.is_empty() {
        return Err(ModelError::Empty);
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(ModelError::InvalidParameter("non-finite training data".into()));
    }
    Ok(())
}
