use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_fit, lloyd, KMeansModel, KMeansParams};
use super::{squared_distance, ClusterError, Result};
use crate::seed::derive_seed;

/// Within-cluster sum of squares per k and the selected elbow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowCurve {
    pub ks: Vec<usize>,
    pub wcss: Vec<f64>,
    pub selected_k: usize,
    /// No interior point bends noticeably; the choice needs human review.
    pub low_curvature: bool,
    /// Fewer than three points; no curvature can be measured.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElbowSelection {
    pub selected_k: usize,
    pub low_curvature: bool,
    pub degenerate: bool,
}

/// An elbow curve together with the model fitted at every k.
#[derive(Debug, Clone)]
pub struct ElbowScan {
    pub curve: ElbowCurve,
    pub models: Vec<KMeansModel>,
}

impl ElbowScan {
    pub fn model_for(&self, k: usize) -> Option<&KMeansModel> {
        self.models.iter().find(|m| m.k == k)
    }
}

/// Maximum-curvature elbow: the interior k with the largest second
/// difference `w(k-1) - 2 w(k) + w(k+1)`, ties to the smallest k.
///
/// The curve is flagged low-curvature when that second difference is at most
/// 10% of the mean absolute slope of the whole curve.
pub fn select_elbow(ks: &[usize], wcss: &[f64]) -> ElbowSelection {
    assert_eq!(ks.len(), wcss.len());
    assert!(!ks.is_empty());
    if ks.len() < 3 {
        return ElbowSelection {
            selected_k: ks[0],
            low_curvature: true,
            degenerate: true,
        };
    }
    let mut best = 1;
    let mut best_sd = f64::NEG_INFINITY;
    for i in 1..ks.len() - 1 {
        let sd = wcss[i - 1] - 2.0 * wcss[i] + wcss[i + 1];
        if sd > best_sd {
            best_sd = sd;
            best = i;
        }
    }
    let slope = (wcss[0] - wcss[wcss.len() - 1]).abs() / (ks.len() - 1) as f64;
    ElbowSelection {
        selected_k: ks[best],
        low_curvature: !(best_sd > 0.1 * slope) || slope == 0.0,
        degenerate: false,
    }
}

/// Fits k-means for every k in `k_min..=k_max` and selects the elbow.
///
/// The fit at k uses seed `derive_seed(base.seed, "elbow", k)`. From the
/// second k on, a warm start (previous centroids plus the point farthest
/// from its centroid) is also refined and kept if it has lower inertia,
/// which makes the curve non-increasing in k.
pub fn elbow_scan(
    x: ArrayView2<f64>,
    k_min: usize,
    k_max: usize,
    base: &KMeansParams,
) -> Result<ElbowScan> {
    if k_min == 0 || k_min > k_max {
        return Err(ClusterError::InvalidParameter(format!(
            "invalid k range {k_min}..={k_max}"
        )));
    }
    let mut models: Vec<KMeansModel> = Vec::new();
    for k in k_min..=k_max {
        let params = KMeansParams {
            k,
            seed: derive_seed(base.seed, "elbow", k as u64),
            ..*base
        };
        let mut model = kmeans_fit(x, &params)?;
        if let Some(prev) = models.last() {
            let far = x
                .outer_iter()
                .zip(&prev.labels)
                .map(|(r, &l)| squared_distance(r.as_slice().expect("contiguous"), &prev.centroids[l]))
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, d)| if d > best.1 { (i, d) } else { best })
                .0;
            let mut init = prev.centroids.clone();
            init.push(x.row(far).to_vec());
            let warm = lloyd(x, init, params.max_iter, params.tol);
            if warm.inertia < model.inertia {
                model = KMeansModel {
                    k,
                    centroids: warm.centroids,
                    labels: warm.labels,
                    inertia: warm.inertia,
                    n_iter: warm.n_iter,
                    seed: params.seed,
                };
            }
        }
        models.push(model);
    }
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let wcss: Vec<f64> = models.iter().map(|m| m.inertia).collect();
    let sel = select_elbow(&ks, &wcss);
    Ok(ElbowScan {
        curve: ElbowCurve {
            ks,
            wcss,
            selected_k: sel.selected_k,
            low_curvature: sel.low_curvature,
            degenerate: sel.degenerate,
        },
        models,
    })
}
