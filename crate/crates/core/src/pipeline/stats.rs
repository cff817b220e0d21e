use serde::{Deserialize, Serialize};

use crate::stats::{mean, quantile_sorted, sample_std};
use crate::tabular::QualityDataset;

/// Columns of the per-cluster statistics tables, in display order.
pub const STATS_COLUMNS: [&str; 8] = [
    "delta_tr",
    "snr",
    "skewness",
    "peak_area",
    "length",
    "sulfur_count",
    "retention_time",
    "injection_volume",
];

/// Row labels of the statistics tables.
pub const STAT_ROWS: [&str; 7] = ["mean", "std", "min", "25%", "median", "75%", "max"];

/// Descriptive statistics of one column; quantiles interpolate linearly
/// between order statistics and `std` is the sample (n-1) deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            count: values.len(),
            mean: mean(values),
            std: sample_std(values),
            min: sorted[0],
            q25: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q75: quantile_sorted(&sorted, 0.75),
            max: sorted[sorted.len() - 1],
        })
    }

    /// Values in [`STAT_ROWS`] order.
    pub fn rows(&self) -> [f64; 7] {
        [self.mean, self.std, self.min, self.q25, self.median, self.q75, self.max]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub column: String,
    /// `None` when every value of the column is missing.
    pub summary: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub cluster: usize,
    pub size: usize,
    /// Single-member cluster: every standard deviation is reported as 0.
    pub degenerate: bool,
    pub columns: Vec<ColumnStats>,
}

impl ClusterStats {
    pub fn column(&self, name: &str) -> Option<&Summary> {
        self.columns
            .iter()
            .find(|c| c.column == name)
            .and_then(|c| c.summary.as_ref())
    }
}

/// Statistics of the rows labelled `cluster`. Returns `None` for an empty
/// cluster.
pub fn cluster_stats(ds: &QualityDataset, labels: &[usize], cluster: usize) -> Option<ClusterStats> {
    assert_eq!(ds.len(), labels.len(), "one label per record");
    let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == cluster).collect();
    if rows.is_empty() {
        return None;
    }
    let columns = STATS_COLUMNS
        .iter()
        .map(|&name| {
            let values: Vec<f64> = rows.iter().filter_map(|&i| ds.records[i].get(name)).collect();
            ColumnStats {
                column: name.to_string(),
                summary: Summary::of(&values),
            }
        })
        .collect();
    Some(ClusterStats {
        cluster,
        size: rows.len(),
        degenerate: rows.len() == 1,
        columns,
    })
}
