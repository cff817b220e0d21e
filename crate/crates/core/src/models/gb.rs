use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_presorted, DecisionTreeRegressor, Presorted};
use super::{check_xy, ModelError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbParams {
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub max_leaf_nodes: usize,
}

impl Default for GbParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            n_estimators: 100,
            max_depth: 3,
            max_leaf_nodes: 10,
        }
    }
}

impl GbParams {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.n_estimators == 0 || self.max_depth == 0 || self.max_leaf_nodes == 0 {
            return Err(ModelError::InvalidParameter(
                "n_estimators, max_depth and max_leaf_nodes must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Squared-error gradient boosting:
/// `prediction = base + learning_rate * sum(tree outputs)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostRegressor {
    pub params: GbParams,
    /// Mean of the training target.
    pub base: f64,
    pub trees: Vec<DecisionTreeRegressor>,
    /// Training RMSE before the first tree and after every round.
    pub train_rmse: Vec<f64>,
}

impl GradientBoostRegressor {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.base
            + self.params.learning_rate * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let x = x.as_standard_layout();
        x.outer_iter()
            .map(|r| self.predict_row(r.as_slice().expect("contiguous")))
            .collect()
    }
}

fn rms(residuals: &[f64]) -> f64 {
    (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt()
}

/// Fits trees stagewise to the residuals of the current prediction. Stops
/// early only if the residuals become identically zero.
pub fn fit_gb(x: ArrayView2<f64>, y: &[f64], params: &GbParams) -> Result<GradientBoostRegressor> {
    check_xy(&x, y)?;
    params.validate()?;
    let x = x.as_standard_layout();
    let presorted = Presorted::new(x.view());
    let base = y.iter().sum::<f64>() / y.len() as f64;
    let mut residuals: Vec<f64> = y.iter().map(|v| v - base).collect();
    let mut train_rmse = vec![rms(&residuals)];
    let mut trees = Vec::with_capacity(params.n_estimators);

    for _ in 0..params.n_estimators {
        if residuals.iter().all(|&r| r == 0.0) {
            break;
        }
        let tree = fit_tree_presorted(
            x.view(),
            &presorted,
            &residuals,
            params.max_depth,
            params.max_leaf_nodes,
        );
        for (r, row) in residuals.iter_mut().zip(x.outer_iter()) {
            *r -= params.learning_rate * tree.predict_row(row.as_slice().expect("contiguous"));
        }
        train_rmse.push(rms(&residuals));
        trees.push(tree);
    }
    Ok(GradientBoostRegressor {
        params: *params,
        base,
        trees,
        train_rmse,
    })
}
