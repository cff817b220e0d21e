use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::{PipelineError, Result};
use crate::models::{grid_search, rmse, CvScore, GridSearchResult, MetricPair, ModelParams};
use crate::seed::derive_seed;

/// Seed index of the shared tuning run (per-cluster runs use the cluster id).
pub const SHARED_CV_INDEX: u64 = u64::MAX;

/// Metrics as reported: when the targets are constant, R² is taken as 1 for
/// a perfect prediction and 0 otherwise so the report stays finite.
pub fn report_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<MetricPair> {
    let e = rmse(y_true, y_pred).map_err(|e| PipelineError::stage("evaluate", e))?;
    match MetricPair::compute(y_true, y_pred) {
        Ok(m) => Ok(m),
        Err(_) => Ok(MetricPair {
            rmse: e,
            r2: if e == 0.0 { 1.0 } else { 0.0 },
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterStatus {
    Modelled,
    InsufficientData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub cluster: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub status: ClusterStatus,
    pub note: Option<String>,
    pub params: Option<ModelParams>,
    pub train: Option<MetricPair>,
    pub test: Option<MetricPair>,
    /// Index of the chosen grid combination.
    pub best_index: Option<usize>,
    pub cv_scores: Vec<CvScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClusterEvaluation {
    pub clusters: Vec<ClusterModel>,
    /// Pooled per-cluster predictions over the training rows of modelled
    /// clusters.
    pub global_train: Option<MetricPair>,
    /// Parameters tuned once on all training rows, when tuning is shared.
    pub shared_params: Option<ModelParams>,
}

/// Smallest training membership that is modelled.
pub fn min_cluster_size(folds: usize) -> usize {
    folds.max(10)
}

fn rows_of(labels: &[usize], c: usize) -> Vec<usize> {
    (0..labels.len()).filter(|&i| labels[i] == c).collect()
}

fn pick(y: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| y[i]).collect()
}

/// Tunes and fits one model per cluster on that cluster's training rows and
/// scores it on the cluster's test rows.
///
/// Cluster `c` is tuned with CV seed `derive_seed(seed, "cv", c)`; shared
/// tuning uses index [`SHARED_CV_INDEX`] on all training rows and then refits
/// the chosen parameters inside each cluster.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_per_cluster(
    x_train: ArrayView2<f64>,
    y_train: &[f64],
    x_test: ArrayView2<f64>,
    y_test: &[f64],
    labels_train: &[usize],
    labels_test: &[usize],
    k: usize,
    model: &ModelConfig,
    seed: u64,
) -> Result<PerClusterEvaluation> {
    if x_train.nrows() != y_train.len() || x_train.nrows() != labels_train.len() {
        return Err(PipelineError::stage("evaluate", "training rows, targets and labels differ in length"));
    }
    if x_test.nrows() != y_test.len() || x_test.nrows() != labels_test.len() {
        return Err(PipelineError::stage("evaluate", "test rows, targets and labels differ in length"));
    }
    let grid = model.grid();
    let shared: Option<GridSearchResult> = if model.share_tuning {
        let r = grid_search(
            model.family,
            grid,
            x_train,
            y_train,
            model.folds,
            derive_seed(seed, "cv", SHARED_CV_INDEX),
        )
        .map_err(|e| PipelineError::stage("evaluate", e))?;
        Some(r)
    } else {
        None
    };

    let mut clusters = Vec::with_capacity(k);
    let mut pooled_true = Vec::new();
    let mut pooled_pred = Vec::new();
    for c in 0..k {
        let tr = rows_of(labels_train, c);
        let te = rows_of(labels_test, c);
        let mut entry = ClusterModel {
            cluster: c,
            n_train: tr.len(),
            n_test: te.len(),
            status: ClusterStatus::InsufficientData,
            note: None,
            params: None,
            train: None,
            test: None,
            best_index: None,
            cv_scores: Vec::new(),
        };
        let needed = min_cluster_size(model.folds);
        if tr.len() < needed {
            entry.note = Some(format!("insufficient data: {} training rows, need {needed}", tr.len()));
            clusters.push(entry);
            continue;
        }
        if te.is_empty() {
            entry.note = Some("insufficient data: no test rows".into());
            clusters.push(entry);
            continue;
        }
        let xc = x_train.select(Axis(0), &tr);
        let yc = pick(y_train, &tr);
        let fitted = match &shared {
            Some(s) => {
                entry.best_index = Some(s.best_index);
                s.best_params.fit(xc.view(), &yc)
            }
            None => {
                let r = grid_search(
                    model.family,
                    grid,
                    xc.view(),
                    &yc,
                    model.folds,
                    derive_seed(seed, "cv", c as u64),
                );
                match r {
                    Ok(r) => {
                        entry.best_index = Some(r.best_index);
                        entry.cv_scores = r.scores;
                        Ok(r.model)
                    }
                    Err(e) => Err(e),
                }
            }
        };
        let fitted = match fitted {
            Ok(m) => m,
            Err(e) => {
                entry.note = Some(format!("model fitting failed: {e}"));
                clusters.push(entry);
                continue;
            }
        };
        let train_pred = fitted.predict(xc.view());
        let xt = x_test.select(Axis(0), &te);
        let yt = pick(y_test, &te);
        let test_pred = fitted.predict(xt.view());
        entry.train = Some(report_metrics(&yc, &train_pred)?);
        entry.test = Some(report_metrics(&yt, &test_pred)?);
        entry.params = Some(fitted.params());
        entry.status = ClusterStatus::Modelled;
        pooled_true.extend_from_slice(&yc);
        pooled_pred.extend(train_pred);
        clusters.push(entry);
    }
    let global_train = if pooled_true.is_empty() {
        None
    } else {
        Some(report_metrics(&pooled_true, &pooled_pred)?)
    };
    Ok(PerClusterEvaluation {
        clusters,
        global_train,
        shared_params: shared.map(|s| s.best_params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ParamGrid;
    use ndarray::Array2;

    fn small_model() -> ModelConfig {
        ModelConfig {
            gradient_boost: ParamGrid::new(vec![
                ("n_estimators".into(), vec![20.0]),
                ("max_depth".into(), vec![2.0]),
            ])
            .unwrap(),
            folds: 3,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn constant_clusters_are_predicted_exactly() {
        let n = 30;
        let x = Array2::from_shape_fn((n, 2), |(i, j)| (i * (j + 1)) as f64);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let y: Vec<f64> = labels.iter().map(|&l| if l == 0 { 2.0 } else { 7.0 }).collect();
        let ev = evaluate_per_cluster(x.view(), &y, x.view(), &y, &labels, &labels, 2, &small_model(), 1).unwrap();
        for c in &ev.clusters {
            assert_eq!(c.status, ClusterStatus::Modelled);
            assert_eq!(c.test, Some(MetricPair { rmse: 0.0, r2: 1.0 }));
        }
        assert_eq!(ev.global_train.unwrap().rmse, 0.0);
    }

    #[test]
    fn small_clusters_are_not_modelled() {
        let n = 25;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= 20)).collect();
        let ev = evaluate_per_cluster(x.view(), &y, x.view(), &y, &labels, &labels, 2, &small_model(), 1).unwrap();
        assert_eq!(ev.clusters[0].status, ClusterStatus::Modelled);
        assert_eq!(ev.clusters[1].status, ClusterStatus::InsufficientData);
        assert!(ev.clusters[1].note.as_deref().unwrap().starts_with("insufficient data"));
    }

    #[test]
    fn shared_tuning_reuses_one_parameter_set() {
        let n = 40;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let y: Vec<f64> = (0..n).map(|i| (i as f64 / 5.0).sin()).collect();
        let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= 20)).collect();
        let mut m = small_model();
        m.share_tuning = true;
        m.gradient_boost = ParamGrid::new(vec![("learning_rate".into(), vec![0.05, 0.2])]).unwrap();
        let ev = evaluate_per_cluster(x.view(), &y, x.view(), &y, &labels, &labels, 2, &m, 4).unwrap();
        let shared = ev.shared_params.unwrap();
        assert!(ev.clusters.iter().all(|c| c.params == Some(shared)));
    }
}
