use rand::seq::SliceRandom;

use super::{QualityDataset, Result, TabularError};
use crate::seed::rng;

/// Seeded shuffled split of `0..n` into (train, test) row indices, each sorted
/// ascending. The test part has `ceil(n * test_fraction)` rows.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(TabularError::InvalidParameter(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    // Guard against products such as 865 * 0.2 landing one ulp above an integer.
    let n_test = ((n as f64 * test_fraction) * (1.0 - 1e-12)).ceil() as usize;
    if n_test == 0 || n_test >= n {
        return Err(TabularError::InvalidParameter(format!(
            "cannot split {n} rows with test_fraction {test_fraction}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng(seed));
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

pub fn split_train_test(
    ds: &QualityDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(QualityDataset, QualityDataset)> {
    let (train, test) = split_indices(ds.len(), test_fraction, seed)?;
    Ok((ds.select(&train), ds.select(&test)))
}
