use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Result, TabularError};

/// Short content hash of a matrix, recorded with fitted parameters.
pub fn fingerprint(x: ArrayView2<f64>) -> String {
    let mut h = Sha256::new();
    h.update((x.nrows() as u64).to_le_bytes());
    h.update((x.ncols() as u64).to_le_bytes());
    for v in x.iter() {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

fn check_columns(x: ArrayView2<f64>, columns: &[String]) -> Result<()> {
    if x.ncols() != columns.len() {
        return Err(TabularError::DimensionMismatch {
            expected: columns.len(),
            found: x.ncols(),
        });
    }
    if x.nrows() == 0 {
        return Err(TabularError::EmptyDataset);
    }
    Ok(())
}

/// Z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScoreParams {
    pub columns: Vec<String>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub fitted_on: String,
}

impl ZScoreParams {
    pub fn fit(x: ArrayView2<f64>, columns: &[String]) -> Result<Self> {
        check_columns(x, columns)?;
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            // Constant columns can leave a rounding residue in the variance.
            if !(var.sqrt() > 1e-12 * m.abs().max(f64::MIN_POSITIVE)) {
                return Err(TabularError::ZeroVarianceFeature(columns[j].clone()));
            }
            mean.push(m);
            std.push(var.sqrt());
        }
        Ok(Self {
            columns: columns.to_vec(),
            mean,
            std,
            fitted_on: fingerprint(x),
        })
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_columns(x, &self.columns)?;
        let mut out = x.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| (v - self.mean[j]) / self.std[j]);
        }
        Ok(out)
    }
}

/// Min-max parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxParams {
    pub columns: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub fitted_on: String,
}

impl MinMaxParams {
    pub fn fit(x: ArrayView2<f64>, columns: &[String]) -> Result<Self> {
        check_columns(x, columns)?;
        let mut min = Vec::with_capacity(x.ncols());
        let mut max = Vec::with_capacity(x.ncols());
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(hi > lo) {
                return Err(TabularError::DegenerateRange(columns[j].clone()));
            }
            min.push(lo);
            max.push(hi);
        }
        Ok(Self {
            columns: columns.to_vec(),
            min,
            max,
            fitted_on: fingerprint(x),
        })
    }

    /// Scales to [0, 1]; values outside the fitted range are clamped and
    /// counted.
    pub fn apply(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, usize)> {
        check_columns(x, &self.columns)?;
        let mut out = x.to_owned();
        let mut clamped = 0;
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (lo, span) = (self.min[j], self.max[j] - self.min[j]);
            for v in col.iter_mut() {
                let s = (*v - lo) / span;
                if !(0.0..=1.0).contains(&s) {
                    clamped += 1;
                }
                *v = s.clamp(0.0, 1.0);
            }
        }
        Ok((out, clamped))
    }
}

/// Standardizes `x`. With `params`, the stored transform is applied without
/// refitting; otherwise parameters are fitted on `x` first.
pub fn standardize(
    x: ArrayView2<f64>,
    columns: &[String],
    params: Option<&ZScoreParams>,
) -> Result<(Array2<f64>, ZScoreParams)> {
    let params = match params {
        Some(p) => p.clone(),
        None => ZScoreParams::fit(x, columns)?,
    };
    Ok((params.apply(x)?, params))
}

/// Result of [`normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub matrix: Array2<f64>,
    pub params: MinMaxParams,
    /// Number of cells clamped into [0, 1] under supplied parameters.
    pub clamped: usize,
}

/// Min-max scales `x` to [0, 1], fitting on `x` unless `params` is given.
pub fn normalize(
    x: ArrayView2<f64>,
    columns: &[String],
    params: Option<&MinMaxParams>,
) -> Result<Normalized> {
    let params = match params {
        Some(p) => p.clone(),
        None => MinMaxParams::fit(x, columns)?,
    };
    let (matrix, clamped) = params.apply(x)?;
    if clamped > 0 {
        log::warn!("normalize: clamped {clamped} value(s) outside the fitted range");
    }
    Ok(Normalized {
        matrix,
        params,
        clamped,
    })
}

/// Scaling applied before PCA and modelling: z-score followed by min-max,
/// each optional, both fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub zscore: Option<ZScoreParams>,
    pub minmax: Option<MinMaxParams>,
}

impl ScalingParams {
    pub fn fit(
        x: ArrayView2<f64>,
        columns: &[String],
        standardize_first: bool,
        then_normalize: bool,
    ) -> Result<Self> {
        let zscore = if standardize_first {
            Some(ZScoreParams::fit(x, columns)?)
        } else {
            None
        };
        let staged = match &zscore {
            Some(z) => z.apply(x)?,
            None => x.to_owned(),
        };
        let minmax = if then_normalize {
            Some(MinMaxParams::fit(staged.view(), columns)?)
        } else {
            None
        };
        Ok(Self { zscore, minmax })
    }

    /// Applies the fitted transforms; returns the matrix and clamp count.
    pub fn transform(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, usize)> {
        let staged = match &self.zscore {
            Some(z) => z.apply(x)?,
            None => x.to_owned(),
        };
        match &self.minmax {
            Some(m) => m.apply(staged.view()),
            None => Ok((staged, 0)),
        }
    }
}
