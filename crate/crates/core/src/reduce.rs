//! Principal component analysis.
//!
//! The covariance matrix (1/(n-1) normalisation) is diagonalised with the
//! cyclic Jacobi method, which is exact enough and simple for the handful of
//! features used here. Eigenvectors are sign-normalised so that the
//! largest-magnitude coordinate of every component is positive.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("requested {requested} components from {features} features")]
    TooManyComponents { requested: usize, features: usize },
    #[error("dimension mismatch: model has {expected} features, input has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("input has zero total variance")]
    ZeroVariance,
    #[error("input contains non-finite values")]
    NonFinite,
}

pub type Result<T, E = ReduceError> = std::result::Result<T, E>;

/// Eigenvalues below this are treated as zero rank.
const RANK_EPS: f64 = 1e-12;

/// Fitted PCA model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `n_components` rows of length `n_features`, by decreasing eigenvalue.
    pub components: Vec<Vec<f64>>,
    /// Full covariance spectrum, descending.
    pub eigenvalues: Vec<f64>,
    /// Explained-variance ratio of every component of the fitted space.
    pub variance_ratios: Vec<f64>,
    /// Set when a retained eigenvalue is below 1e-12.
    pub rank_deficient: bool,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Ratios of the retained components.
    pub fn retained_ratios(&self) -> &[f64] {
        &self.variance_ratios[..self.n_components()]
    }

    pub fn components_matrix(&self) -> Array2<f64> {
        let d = self.n_features();
        let flat: Vec<f64> = self.components.iter().flatten().copied().collect();
        Array2::from_shape_vec((self.n_components(), d), flat).expect("rectangular components")
    }

    /// Projects `x - mean` onto the component rows.
    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features() {
            return Err(ReduceError::DimensionMismatch {
                expected: self.n_features(),
                found: x.ncols(),
            });
        }
        let mean = ArrayView1::from(&self.mean[..]);
        let centered = &x - &mean;
        Ok(centered.dot(&self.components_matrix().t()))
    }

    /// Maps reduced coordinates back to feature space.
    pub fn inverse_transform(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.n_components() {
            return Err(ReduceError::DimensionMismatch {
                expected: self.n_components(),
                found: z.ncols(),
            });
        }
        let mean = ArrayView1::from(&self.mean[..]);
        Ok(z.dot(&self.components_matrix()) + &mean)
    }
}

/// Sample covariance matrix (1/(n-1)).
pub fn covariance(x: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = x.nrows();
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = &x - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    (mean, cov)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// Returns eigenvalues (unsorted) and eigenvectors as columns.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| m[[p, q]] * m[[p, q]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| m[[i, i]]).collect(), v)
}

/// Fits a PCA model retaining `n_components` components.
pub fn fit_pca(x: ArrayView2<f64>, n_components: usize) -> Result<PcaModel> {
    let (n, d) = x.dim();
    if n < 2 {
        return Err(ReduceError::TooFewSamples(n));
    }
    if n_components == 0 || n_components > d {
        return Err(ReduceError::TooManyComponents {
            requested: n_components,
            features: d,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(ReduceError::NonFinite);
    }
    let (mean, cov) = covariance(x);
    let (values, vectors) = symmetric_eigen(&cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| values[i].max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    if !(total > 0.0) {
        return Err(ReduceError::ZeroVariance);
    }
    let variance_ratios = eigenvalues.iter().map(|v| v / total).collect();

    let components: Vec<Vec<f64>> = order[..n_components]
        .iter()
        .map(|&i| {
            let mut c = vectors.column(i).to_vec();
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            let lead = c
                .iter()
                .enumerate()
                .fold(0, |best, (j, v)| if v.abs() > c[best].abs() { j } else { best });
            let sign = if c[lead] < 0.0 { -1.0 } else { 1.0 };
            c.iter_mut().for_each(|v| *v *= sign / norm);
            c
        })
        .collect();
    let rank_deficient = eigenvalues[..n_components].iter().any(|&v| v < RANK_EPS);
    if rank_deficient {
        log::warn!("PCA: a retained component has eigenvalue < {RANK_EPS}");
    }

    Ok(PcaModel {
        mean: mean.to_vec(),
        components,
        eigenvalues,
        variance_ratios,
        rank_deficient,
    })
}

/// Smallest number of leading components whose cumulative ratio exceeds
/// `threshold`; all components if none does.
pub fn choose_components(ratios: &[f64], threshold: f64) -> usize {
    let mut cumulative = 0.0;
    for (i, r) in ratios.iter().enumerate() {
        cumulative += r;
        if cumulative > threshold {
            return i + 1;
        }
    }
    ratios.len()
}
