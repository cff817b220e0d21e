//! Independent oracles shared by the integration suites. Nothing here calls
//! the code under test except to build fixtures.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc;

use qualeval::models::SvrModel;

/// Closed-form EMG shape with the Gaussian centred at 0. Written with plain
/// `erfc`, so only valid where `exp` does not overflow.
pub fn emg_shape(t: f64, sigma: f64, tau: f64) -> f64 {
    (sigma * sigma / (2.0 * tau * tau) - t / tau).exp()
        * erfc((sigma / tau - t / sigma) / std::f64::consts::SQRT_2)
}

/// Half-height skewness measured on a 10⁶-point grid of the closed form.
pub fn dense_grid_skewness(sigma: f64, tau: f64) -> f64 {
    const N: usize = 1_000_000;
    let (lo, hi) = (-8.0 * sigma, 8.0 * sigma + 12.0 * tau);
    let dt = (hi - lo) / (N - 1) as f64;
    let y: Vec<f64> = (0..N).map(|i| emg_shape(lo + i as f64 * dt, sigma, tau)).collect();
    let apex = (0..N).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
    let half = 0.5 * y[apex];
    let l = (0..apex).rev().find(|&i| y[i] < half).unwrap();
    let r = (apex..N).find(|&i| y[i] < half).unwrap();
    let t = |i: usize| lo + i as f64 * dt;
    let tl = t(l) + (half - y[l]) / (y[l + 1] - y[l]) * dt;
    let tr = t(r) - (half - y[r]) / (y[r - 1] - y[r]) * dt;
    (tr - t(apex)) / (t(apex) - tl)
}

pub fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut r = chacha(seed);
    Array2::from_shape_fn((rows, cols), |_| r.random::<f64>() * 2.0 - 1.0)
}

/// Correlated features: a random mixing of independent columns with
/// decreasing scales, so eigenvalues are well separated.
pub fn correlated(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let z = random_matrix(rows, cols, seed);
    let mut mix = random_matrix(cols, cols, seed ^ 0xabcd);
    for (j, mut col) in mix.columns_mut().into_iter().enumerate() {
        col *= 1.0 / (1 + j) as f64;
    }
    z.dot(&mix.t())
}

/// Eigenvalues of the sample covariance, descending, from nalgebra.
pub fn covariance_eigenvalues(x: ArrayView2<f64>) -> Vec<f64> {
    let (n, d) = x.dim();
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).sum() / n as f64).collect();
    let m = DMatrix::from_fn(n, d, |i, j| x[[i, j]] - mean[j]);
    let cov = (m.transpose() * &m) / (n as f64 - 1.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Textbook O(n²) silhouette; singleton members score 0.
pub fn naive_silhouette(x: ArrayView2<f64>, labels: &[usize]) -> Vec<f64> {
    let pts: Vec<Vec<f64>> = x.outer_iter().map(|r| r.to_vec()).collect();
    let k = labels.iter().max().unwrap() + 1;
    (0..pts.len())
        .map(|i| {
            let mut sum = vec![0.0; k];
            let mut cnt = vec![0usize; k];
            for j in 0..pts.len() {
                if j != i {
                    sum[labels[j]] += dist(&pts[i], &pts[j]);
                    cnt[labels[j]] += 1;
                }
            }
            let own = labels[i];
            if cnt[own] == 0 {
                return 0.0;
            }
            let a = sum[own] / cnt[own] as f64;
            let b = (0..k)
                .filter(|&c| c != own && cnt[c] > 0)
                .map(|c| sum[c] / cnt[c] as f64)
                .fold(f64::INFINITY, f64::min);
            (b - a) / a.max(b)
        })
        .collect()
}

/// Isotropic Gaussian blobs around `centers`, `per` points each, with the
/// generating blob index as label.
pub fn blobs(centers: &[[f64; 2]], per: usize, sd: f64, seed: u64) -> (Array2<f64>, Vec<usize>) {
    let noise = Normal::new(0.0, sd).unwrap();
    let mut r = chacha(seed);
    let mut x = Array2::zeros((centers.len() * per, 2));
    let mut labels = Vec::new();
    for (c, centre) in centers.iter().enumerate() {
        for i in 0..per {
            let row = c * per + i;
            x[[row, 0]] = centre[0] + noise.sample(&mut r);
            x[[row, 1]] = centre[1] + noise.sample(&mut r);
            labels.push(c);
        }
    }
    (x, labels)
}

/// Corners of an equilateral triangle with unit sides.
pub const UNIT_TRIANGLE: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.866_025_403_784_438_6]];

/// Misassigned points under the best one-to-one relabelling.
pub fn label_errors(truth: &[usize], found: &[usize], k: usize) -> usize {
    fn perms(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }
    perms(k)
        .into_iter()
        .map(|p| truth.iter().zip(found).filter(|(t, f)| p[**f] != **t).count())
        .min()
        .unwrap()
}

/// Largest KKT violation of an epsilon-SVR solution, recomputed from the
/// dual coefficients: free coefficients need a residual of exactly ±ε,
/// bounded ones at least ε in their direction, zero ones at most ε.
pub fn svr_kkt_residual(model: &SvrModel, x: ArrayView2<f64>, y: &[f64]) -> f64 {
    let (c, eps) = (model.params.c, model.params.epsilon);
    let mut beta = vec![0.0; y.len()];
    for (&i, &b) in model.support_indices.iter().zip(&model.dual_coef) {
        beta[i] = b;
    }
    let bound = 1e-9 * c;
    let mut worst: f64 = 0.0;
    for (i, row) in x.outer_iter().enumerate() {
        let r = y[i] - model.predict_row(row.as_slice().unwrap());
        let b = beta[i];
        let v = if b.abs() <= bound {
            (r.abs() - eps).max(0.0)
        } else if b >= c - bound {
            (eps - r).max(0.0)
        } else if b <= -c + bound {
            (r + eps).max(0.0)
        } else if b > 0.0 {
            (r - eps).abs()
        } else {
            (r + eps).abs()
        };
        worst = worst.max(v);
    }
    worst
}
