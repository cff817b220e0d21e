use ndarray::ArrayView2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{squared_distance, ClusterError, Result};
use crate::seed::{derive_seed, rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            n_init: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

/// Fitted k-means partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Sum of squared Euclidean distances to the assigned centroid.
    pub inertia: f64,
    pub n_iter: usize,
    pub seed: u64,
}

/// One Lloyd run, with the inertia after every assignment step.
#[derive(Debug, Clone, PartialEq)]
pub struct LloydRun {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub n_iter: usize,
    pub inertia_trace: Vec<f64>,
}

fn rows(x: ArrayView2<f64>) -> Vec<Vec<f64>> {
    x.outer_iter().map(|r| r.to_vec()).collect()
}

/// Index of the nearest centroid (ties to the lowest index) and its squared
/// distance.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign_all(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    points.iter().map(|p| nearest(p, centroids)).unzip()
}

/// k-means++ seeding: first centre uniform, then proportional to squared
/// distance from the nearest chosen centre. When every remaining distance
/// is zero the lowest unchosen index is used.
pub fn kmeans_plus_plus(x: ArrayView2<f64>, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let points = rows(x);
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave target at the very end of the cumulative sum.
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

/// Moves the point farthest from its centroid into each empty cluster.
/// Returns true if anything changed.
fn repair_empty(
    points: &[Vec<f64>],
    centroids: &mut [Vec<f64>],
    labels: &mut [usize],
    dist: &mut [f64],
) -> bool {
    let k = centroids.len();
    let mut changed = false;
    loop {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return changed;
        };
        let mut far = None;
        for i in 0..points.len() {
            if counts[labels[i]] > 1 && far.is_none_or(|f: usize| dist[i] > dist[f]) {
                far = Some(i);
            }
        }
        let Some(p) = far else {
            return changed;
        };
        centroids[empty] = points[p].clone();
        labels[p] = empty;
        dist[p] = 0.0;
        changed = true;
    }
}

/// Lloyd iterations from the given centroids until the total squared
/// centroid shift is at most `tol` or `max_iter` updates have run.
pub fn lloyd(x: ArrayView2<f64>, init: Vec<Vec<f64>>, max_iter: usize, tol: f64) -> LloydRun {
    let points = rows(x);
    let d = x.ncols();
    let mut centroids = init;
    let k = centroids.len();
    let mut trace = Vec::new();
    let mut n_iter = 0;

    let (mut labels, mut dist) = assign_all(&points, &centroids);
    let mut converged = false;
    loop {
        if repair_empty(&points, &mut centroids, &mut labels, &mut dist) {
            (labels, dist) = assign_all(&points, &centroids);
        }
        trace.push(dist.iter().sum());
        if converged || n_iter == max_iter {
            break;
        }

        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        let mut shift = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift += squared_distance(&updated, &centroids[c]);
            centroids[c] = updated;
        }
        n_iter += 1;
        (labels, dist) = assign_all(&points, &centroids);
        converged = shift <= tol;
    }
    // With fewer distinct points than k, reassignment can empty a cluster
    // whose centroid coincides with a lower-indexed one. Repair once more
    // without reassigning; the moved point is then tied between the two.
    if repair_empty(&points, &mut centroids, &mut labels, &mut dist) {
        trace.push(dist.iter().sum());
    }
    LloydRun {
        inertia: dist.iter().sum(),
        centroids,
        labels,
        n_iter,
        inertia_trace: trace,
    }
}

fn validate(x: ArrayView2<f64>, p: &KMeansParams) -> Result<()> {
    if p.k == 0 || p.n_init == 0 {
        return Err(ClusterError::InvalidParameter(format!(
            "k ({}) and n_init ({}) must be at least 1",
            p.k, p.n_init
        )));
    }
    if x.nrows() < p.k {
        return Err(ClusterError::TooFewSamples {
            k: p.k,
            n: x.nrows(),
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ClusterError::InvalidParameter("non-finite input".into()));
    }
    Ok(())
}

fn single_run(x: ArrayView2<f64>, p: &KMeansParams, restart: usize) -> LloydRun {
    let mut r = rng(derive_seed(p.seed, "kmeans-restart", restart as u64));
    let init = kmeans_plus_plus(x, p.k, &mut r);
    lloyd(x, init, p.max_iter, p.tol)
}

/// Best of `n_init` k-means++ / Lloyd runs by inertia (ties to the earliest
/// restart). Restart `r` draws from `derive_seed(seed, "kmeans-restart", r)`.
pub fn kmeans_fit(x: ArrayView2<f64>, params: &KMeansParams) -> Result<KMeansModel> {
    validate(x, params)?;
    #[cfg(feature = "parallel")]
    let runs: Vec<LloydRun> = {
        use rayon::prelude::*;
        (0..params.n_init)
            .into_par_iter()
            .map(|r| single_run(x, params, r))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<LloydRun> = (0..params.n_init)
        .map(|r| single_run(x, params, r))
        .collect();

    let best = runs
        .into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("n_init >= 1");
    Ok(KMeansModel {
        k: params.k,
        centroids: best.centroids,
        labels: best.labels,
        inertia: best.inertia,
        n_iter: best.n_iter,
        seed: params.seed,
    })
}

/// Nearest-centroid labels, ties to the lowest index.
pub fn assign(model: &KMeansModel, x: ArrayView2<f64>) -> Result<Vec<usize>> {
    assign_to(&model.centroids, x)
}

pub fn assign_to(centroids: &[Vec<f64>], x: ArrayView2<f64>) -> Result<Vec<usize>> {
    let d = centroids.first().map_or(0, Vec::len);
    if x.ncols() != d {
        return Err(ClusterError::DimensionMismatch {
            expected: d,
            found: x.ncols(),
        });
    }
    Ok(x.outer_iter()
        .map(|r| nearest(r.as_slice().expect("contiguous"), centroids).0)
        .collect())
}
