use std::collections::BTreeMap;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{squared_distance, ClusterError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    pub values: Vec<f64>,
    pub mean: f64,
}

/// Exact silhouette: `s(i) = (b - a) / max(a, b)` with `a` the mean distance
/// to the rest of the own cluster and `b` the smallest mean distance to
/// another cluster. Members of singleton clusters score 0.
pub fn silhouette(x: ArrayView2<f64>, labels: &[usize]) -> Result<SilhouetteReport> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(ClusterError::LabelMismatch {
            labels: labels.len(),
            samples: n,
        });
    }
    let ids: BTreeMap<usize, usize> = {
        let mut distinct: Vec<usize> = labels.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.into_iter().enumerate().map(|(i, l)| (l, i)).collect()
    };
    if ids.len() < 2 {
        return Err(ClusterError::SingleCluster);
    }
    let compact: Vec<usize> = labels.iter().map(|l| ids[l]).collect();
    let mut sizes = vec![0usize; ids.len()];
    compact.iter().for_each(|&c| sizes[c] += 1);
    let points: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();

    let mut values = Vec::with_capacity(n);
    let mut sums = vec![0.0; ids.len()];
    for i in 0..n {
        let own = compact[i];
        if sizes[own] == 1 {
            values.push(0.0);
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[compact[j]] += squared_distance(&points[i], &points[j]).sqrt();
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..ids.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        values.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    Ok(SilhouetteReport { values, mean })
}
