use serde::{Deserialize, Serialize};

use super::{ModelError, Result};

fn check(y_true: &[f64], y_pred: &[f64]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(ModelError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(ModelError::Empty);
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check(y_true, y_pred)?;
    let mse = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum::<f64>()
        / y_true.len() as f64;
    Ok(mse.sqrt())
}

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r_squared(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    check(y_true, y_pred)?;
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean) * (t - mean)).sum();
    if !(ss_tot > 0.0) {
        return Err(ModelError::ZeroVarianceTarget);
    }
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub rmse: f64,
    pub r2: f64,
}

impl MetricPair {
    pub fn compute(y_true: &[f64], y_pred: &[f64]) -> Result<Self> {
        Ok(Self {
            rmse: rmse(y_true, y_pred)?,
            r2: r_squared(y_true, y_pred)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        let y = [1.0, 2.0, 4.0];
        assert_eq!(rmse(&y, &y).unwrap(), 0.0);
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);

        let y = [1.0, 2.0, 3.0, 6.0];
        assert_eq!(r_squared(&y, &[3.0; 4]).unwrap(), 0.0);

        let t = [0.0, 0.0, 1.0, 1.0];
        let p = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(rmse(&t, &p).unwrap(), 0.5_f64.sqrt());
        assert_eq!(r_squared(&t, &p).unwrap(), -1.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(r_squared(&[2.0, 2.0], &[1.0, 2.0]), Err(ModelError::ZeroVarianceTarget)));
        assert!(matches!(rmse(&[1.0], &[1.0, 2.0]), Err(ModelError::LengthMismatch(1, 2))));
        assert!(matches!(rmse(&[], &[]), Err(ModelError::Empty)));
    }
}
