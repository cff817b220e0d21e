use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{check_xy, ModelError, Result};

/// Stopping tolerance on the maximal KKT violation.
pub const SVR_TOL: f64 = 1e-3;
/// Iteration cap of the SMO solver.
pub const SVR_MAX_ITER: usize = 100_000;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl SvrParams {
    pub fn new(c: f64, gamma: f64, epsilon: f64) -> Self {
        Self { c, gamma, epsilon }
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if ok(self.c) && ok(self.gamma) && ok(self.epsilon) {
            Ok(())
        } else {
            Err(ModelError::InvalidParameter(format!(
                "SVR parameters must be positive and finite: {self:?}"
            )))
        }
    }
}

/// Epsilon-SVR with an RBF kernel:
/// `f(x) = sum_i dual_coef[i] * exp(-gamma * |x - sv_i|^2) + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub params: SvrParams,
    pub support_vectors: Vec<Vec<f64>>,
    /// Training-row index of each support vector.
    pub support_indices: Vec<usize>,
    /// `alpha - alpha*` per support vector, within `[-C, C]`.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub n_iter: usize,
    /// False when the iteration cap was hit before the tolerance was met.
    pub converged: bool,
    /// Maximal KKT violation at termination.
    pub kkt_gap: f64,
}

pub(crate) fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    (-gamma * d2).exp()
}

impl SvrModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, b)| b * rbf(sv, row, self.params.gamma))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let x = x.as_standard_layout();
        x.outer_iter()
            .map(|r| self.predict_row(r.as_slice().expect("contiguous")))
            .collect()
    }
}

/// Solves the epsilon-insensitive dual
///
/// ```text
/// min 1/2 (a - a*)' K (a - a*) + eps * sum(a + a*) - y' (a - a*)
/// s.t. sum(a - a*) = 0,  0 <= a, a* <= C
/// ```
///
/// as a 2n-variable problem by sequential minimal optimisation with
/// second-order working-set selection: the maximal violator `i`, paired with
/// the `j` giving the largest decrease of the objective (ties to the lowest
/// index). Stops when the maximal violation drops below [`SVR_TOL`] or
/// [`SVR_MAX_ITER`] steps have run.
pub fn fit_svr(x: ArrayView2<f64>, y: &[f64], params: &SvrParams) -> Result<SvrModel> {
    check_xy(&x, y)?;
    params.validate()?;
    let x = x.as_standard_layout();
    let n = y.len();
    let rows: Vec<&[f64]> = x.outer_iter().map(|r| r.to_slice().expect("contiguous")).collect();

    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        kernel[i * n + i] = 1.0;
        for j in 0..i {
            let k = rbf(rows[i], rows[j], params.gamma);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let c = params.c;
    // Variable t < n is alpha_t (sign +1); t >= n is alpha*_{t-n} (sign -1).
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |s: usize, t: usize| sign(s) * sign(t) * kernel[(s % n) * n + t % n];

    let mut alpha = vec![0.0; 2 * n];
    let mut grad: Vec<f64> = (0..2 * n)
        .map(|t| if t < n { params.epsilon - y[t] } else { params.epsilon + y[t - n] })
        .collect();

    let in_up = |t: usize, a: f64| if t < n { a < c } else { a > 0.0 };
    let in_low = |t: usize, a: f64| if t < n { a > 0.0 } else { a < c };

    let mut n_iter = 0;
    let mut gap;
    loop {
        // i: maximal violator in I_up. j: the I_low member with the largest
        // second-order decrease b^2 / a among those violating with i.
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        for t in 0..2 * n {
            let v = -sign(t) * grad[t];
            if in_up(t, alpha[t]) && v > g_max {
                g_max = v;
                i = t;
            }
        }
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        let mut best = f64::INFINITY;
        if i != usize::MAX {
            let ki = i % n;
            for t in 0..2 * n {
                if !in_low(t, alpha[t]) {
                    continue;
                }
                let v = -sign(t) * grad[t];
                g_min = g_min.min(v);
                let b = g_max - v;
                if b > 0.0 {
                    let kt = t % n;
                    let a = (kernel[ki * n + ki] + kernel[kt * n + kt] - 2.0 * kernel[ki * n + kt]).max(TAU);
                    let obj = -b * b / a;
                    if obj < best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        gap = g_max - g_min;
        if i == usize::MAX || j == usize::MAX || gap < SVR_TOL || n_iter >= SVR_MAX_ITER {
            break;
        }
        n_iter += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        if sign(i) != sign(j) {
            let quad = (2.0 + 2.0 * qij).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (2.0 - 2.0 * qij).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(i, t) * di + q(j, t) * dj;
        }
    }
    let converged = gap < SVR_TOL || !gap.is_finite();
    if !converged {
        log::warn!("SVR: iteration cap {SVR_MAX_ITER} reached with KKT gap {gap:.3e}");
    }

    // Offset from free variables, else the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    for t in 0..2 * n {
        let yg = sign(t) * grad[t];
        let positive = t < n;
        if alpha[t] >= c {
            if positive {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[t] <= 0.0 {
            if positive {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free_n += 1;
        }
    }
    let rho = if free_n > 0 { free_sum / free_n as f64 } else { 0.5 * (ub + lb) };

    let mut support_vectors = Vec::new();
    let mut support_indices = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..n {
        let beta = alpha[i] - alpha[i + n];
        if beta != 0.0 {
            support_vectors.push(rows[i].to_vec());
            support_indices.push(i);
            dual_coef.push(beta);
        }
    }
    Ok(SvrModel {
        params: *params,
        support_vectors,
        support_indices,
        dual_coef,
        bias: -rho,
        n_iter,
        converged,
        kkt_gap: if gap.is_finite() { gap.max(0.0) } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn sine(n: usize) -> (Array2<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..n).map(|i| 6.0 * i as f64 / (n - 1) as f64).collect();
        let y = xs.iter().map(|v| v.sin()).collect();
        (Array2::from_shape_vec((n, 1), xs).unwrap(), y)
    }

    #[test]
    fn constant_target_stays_in_tube() {
        let (x, _) = sine(20);
        let y = vec![3.5; 20];
        let p = SvrParams::new(10.0, 0.5, 0.01);
        let m = fit_svr(x.view(), &y, &p).unwrap();
        assert!(m.dual_coef.is_empty());
        for v in m.predict(x.view()) {
            assert!((v - 3.5).abs() <= 0.01);
        }
    }

    #[test]
    fn fits_a_sine() {
        let (x, y) = sine(80);
        let p = SvrParams::new(100.0, 1.0, 1e-4);
        let m = fit_svr(x.view(), &y, &p).unwrap();
        assert!(m.converged);
        let pred = m.predict(x.view());
        let rmse = super::super::rmse(&y, &pred).unwrap();
        assert!(rmse < 0.05, "rmse {rmse}");
        assert!(m.dual_coef.iter().all(|b| b.abs() <= p.c + 1e-9));
        assert!(m.kkt_gap < SVR_TOL);
    }

    #[test]
    fn shift_in_target_moves_only_the_bias() {
        let (x, y) = sine(40);
        let p = SvrParams::new(5.0, 0.7, 0.05);
        let a = fit_svr(x.view(), &y, &p).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + 10.0).collect();
        let b = fit_svr(x.view(), &shifted, &p).unwrap();
        // Exact arithmetic gives identical paths; in floating point a flipped
        // near-tie can change the path, and two solutions each within the
        // stopping tolerance may differ by twice that.
        let worst = a
            .predict(x.view())
            .iter()
            .zip(b.predict(x.view()))
            .fold(0.0_f64, |m, (pa, pb)| m.max((pb - pa - 10.0).abs()));
        assert!(worst < 2.0 * SVR_TOL, "{worst}");
    }

    #[test]
    fn rejects_non_positive_parameters() {
        let (x, y) = sine(5);
        assert!(fit_svr(x.view(), &y, &SvrParams::new(0.0, 1.0, 0.1)).is_err());
        assert!(fit_svr(x.view(), &y, &SvrParams::new(1.0, -1.0, 0.1)).is_err());
    }
}
