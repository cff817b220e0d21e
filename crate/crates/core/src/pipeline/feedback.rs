use std::fmt;

use serde::{Deserialize, Serialize};

use super::report::EvaluationReport;
use crate::tabular::FEATURES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Above,
    Below,
}

/// A feature whose cluster mean lies more than one pooled within-cluster
/// standard deviation from the dataset mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub feature: String,
    pub direction: Direction,
    pub cluster_mean: f64,
    pub dataset_mean: f64,
    /// `(cluster_mean - dataset_mean) / pooled_std`.
    pub deviation: f64,
}

impl fmt::Display for Characteristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::Above => "above",
            Direction::Below => "below",
        };
        write!(f, "{}: {dir} dataset mean", self.feature)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFeedback {
    pub cluster: usize,
    pub r2_test: Option<f64>,
    pub characteristics: Vec<Characteristic>,
}

/// Clusters from highest to lowest test R².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackSummary {
    /// Cluster ids in rank order; a permutation of `0..k`.
    pub ranking: Vec<usize>,
    pub clusters: Vec<ClusterFeedback>,
}

/// Ranks clusters by test R² descending (ties to the lower id, unmodelled
/// clusters last) and extracts each cluster's distinctive features from the
/// statistics already in the report.
///
/// The dataset mean of a feature is the size-weighted mean of the cluster
/// means; the pooled standard deviation is
/// `sqrt(sum((n_c - 1) s_c^2) / (N - K))` over clusters with statistics.
pub fn rank_clusters(report: &EvaluationReport) -> FeedbackSummary {
    let mut order: Vec<(usize, Option<f64>)> = report
        .clusters
        .iter()
        .map(|c| (c.cluster, c.model.test.map(|m| m.r2)))
        .collect();
    order.sort_by(|a, b| match (a.1, b.1) {
        (Some(x), Some(y)) => y.total_cmp(&x).then(a.0.cmp(&b.0)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.0.cmp(&b.0),
    });

    let mut overall = Vec::new();
    for feature in FEATURES {
        let parts: Vec<(f64, f64, f64)> = report
            .clusters
            .iter()
            .filter_map(|c| c.stats.as_ref()?.column(feature))
            .map(|s| (s.count as f64, s.mean, s.std))
            .collect();
        let n: f64 = parts.iter().map(|p| p.0).sum();
        if n == 0.0 {
            continue;
        }
        let mean = parts.iter().map(|p| p.0 * p.1).sum::<f64>() / n;
        let dof = n - parts.len() as f64;
        let pooled = if dof > 0.0 {
            (parts.iter().map(|p| (p.0 - 1.0) * p.2 * p.2).sum::<f64>() / dof).sqrt()
        } else {
            0.0
        };
        overall.push((feature, mean, pooled));
    }

    let clusters = order
        .iter()
        .map(|&(id, r2)| {
            let stats = report.clusters.iter().find(|c| c.cluster == id).and_then(|c| c.stats.as_ref());
            let characteristics = overall
                .iter()
                .filter_map(|&(feature, mean, pooled)| {
                    let cm = stats?.column(feature)?.mean;
                    let diff = cm - mean;
                    if diff.abs() > pooled && diff != 0.0 {
                        Some(Characteristic {
                            feature: feature.to_string(),
                            direction: if diff > 0.0 { Direction::Above } else { Direction::Below },
                            cluster_mean: cm,
                            dataset_mean: mean,
                            deviation: if pooled > 0.0 { diff / pooled } else { diff.signum() * f64::MAX },
                        })
                    } else {
                        None
                    }
                })
                .collect();
            ClusterFeedback {
                cluster: id,
                r2_test: r2,
                characteristics,
            }
        })
        .collect();
    FeedbackSummary {
        ranking: order.iter().map(|o| o.0).collect(),
        clusters,
    }
}
