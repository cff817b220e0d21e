//! Planted quality tiers for end-to-end checks.
//!
//! Every tier draws SNR, skewness, peak area and retention-time drift from
//! its own normal distributions; length and sulfur count share one
//! distribution across tiers. The target is a smooth function of length and
//! sulfur count plus tier-specific noise, so the achievable R² falls with
//! the tier's noise level.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::seed::{derive_seed, rng};
use crate::tabular::{QualityDataset, QualityRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

impl Gaussian {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }

    fn dist(&self) -> Result<Normal<f64>> {
        Normal::new(self.mean, self.sd).map_err(|e| PipelineError::Config(format!("{self:?}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierSpec {
    pub name: String,
    pub rows: usize,
    pub snr: Gaussian,
    pub skewness: Gaussian,
    pub peak_area: Gaussian,
    pub delta_tr: Gaussian,
    /// Standard deviation of the noise added to the target.
    pub target_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticDatasetSpec {
    #[serde(default = "default_tiers")]
    pub tiers: Vec<TierSpec>,
}

impl Default for SyntheticDatasetSpec {
    fn default() -> Self {
        Self {
            tiers: default_tiers(),
        }
    }
}

/// Three tiers of 300 rows, from clean (A) to noisy (C).
pub fn default_tiers() -> Vec<TierSpec> {
    vec![
        TierSpec {
            name: "A".into(),
            rows: 300,
            snr: Gaussian::new(600.0, 100.0),
            skewness: Gaussian::new(1.1, 0.05),
            peak_area: Gaussian::new(10_000.0, 1_500.0),
            delta_tr: Gaussian::new(0.0, 0.02),
            target_noise: 0.05,
        },
        TierSpec {
            name: "B".into(),
            rows: 300,
            snr: Gaussian::new(200.0, 50.0),
            skewness: Gaussian::new(1.5, 0.2),
            peak_area: Gaussian::new(25_000.0, 2_000.0),
            delta_tr: Gaussian::new(0.1, 0.03),
            target_noise: 0.3,
        },
        TierSpec {
            name: "C".into(),
            rows: 300,
            snr: Gaussian::new(80.0, 30.0),
            skewness: Gaussian::new(1.7, 0.4),
            peak_area: Gaussian::new(3_000.0, 1_000.0),
            delta_tr: Gaussian::new(0.5, 0.08),
            target_noise: 0.8,
        },
    ]
}

/// Noise-free retention time (minutes) of a compound.
pub fn target_function(length: u32, sulfur: u32) -> f64 {
    let l = f64::from(length);
    let s = f64::from(sulfur);
    2.0 + 0.3 * l + 0.15 * s + 0.5 * (l / 3.0).sin()
}

impl SyntheticDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.tiers.is_empty() || self.tiers.iter().any(|t| t.rows == 0) {
            return Err(PipelineError::Config("synthetic tiers must be non-empty".into()));
        }
        for t in &self.tiers {
            for g in [t.snr, t.skewness, t.peak_area, t.delta_tr] {
                g.dist()?;
            }
            if !(t.target_noise >= 0.0) {
                return Err(PipelineError::Config(format!("tier {}: negative target noise", t.name)));
            }
        }
        Ok(())
    }

    pub fn total_rows(&self) -> usize {
        self.tiers.iter().map(|t| t.rows).sum()
    }
}

/// A generated dataset and the planted tier of every row.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: QualityDataset,
    pub tiers: Vec<usize>,
}

/// Generates the tiers in order. SNR, skewness and area are clipped to small
/// positive floors; length is `round(N(16, 3))` clipped to [8, 25] and
/// sulfur count is uniform on `0..length`. Tier `i` draws from
/// `derive_seed(seed, "synth-table", i)`.
pub fn generate(name: &str, spec: &SyntheticDatasetSpec, seed: u64) -> Result<SyntheticDataset> {
    spec.validate()?;
    let length_dist = Normal::new(16.0_f64, 3.0).expect("valid");
    let mut records = Vec::with_capacity(spec.total_rows());
    let mut tiers = Vec::with_capacity(spec.total_rows());
    for (ti, tier) in spec.tiers.iter().enumerate() {
        let mut r = rng(derive_seed(seed, "synth-table", ti as u64));
        let (snr, skew, area, dtr) = (
            tier.snr.dist()?,
            tier.skewness.dist()?,
            tier.peak_area.dist()?,
            tier.delta_tr.dist()?,
        );
        let noise = Normal::new(0.0, tier.target_noise).expect("validated");
        for i in 0..tier.rows {
            let length = length_dist.sample(&mut r).round().clamp(8.0, 25.0) as u32;
            let sulfur = r.random_range(0..length);
            let snr_v = snr.sample(&mut r).max(1.0);
            let skew_v = skew.sample(&mut r).max(0.05);
            let area_v = area.sample(&mut r).max(1.0);
            let dtr_v = dtr.sample(&mut r);
            let rt = (target_function(length, sulfur) + noise.sample(&mut r)).max(0.01);
            records.push(QualityRecord {
                sequence_id: format!("{}-{:04}", tier.name, i + 1),
                delta_tr: Some(dtr_v),
                snr: Some(snr_v),
                skewness: Some(skew_v),
                peak_area: Some(area_v),
                length: Some(length),
                sulfur_count: Some(sulfur),
                injection_volume: None,
                retention_time: Some(rt),
            });
            tiers.push(ti);
        }
    }
    Ok(SyntheticDataset {
        dataset: QualityDataset::new(name, records),
        tiers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape_and_determinism() {
        let spec = SyntheticDatasetSpec::default();
        let a = generate("s", &spec, 5).unwrap();
        assert_eq!(a.dataset.len(), 900);
        assert_eq!(a.tiers.iter().filter(|&&t| t == 2).count(), 300);
        assert!(a.dataset.records.iter().all(|r| r.is_complete()));
        let b = generate("s", &spec, 5).unwrap();
        assert_eq!(a.dataset, b.dataset);
        let c = generate("s", &spec, 6).unwrap();
        assert_ne!(a.dataset, c.dataset);
    }

    #[test]
    fn tier_means_follow_the_spec() {
        let g = generate("s", &SyntheticDatasetSpec::default(), 1).unwrap();
        let mean_snr = |tier: usize| {
            let v: Vec<f64> = g
                .dataset
                .records
                .iter()
                .zip(&g.tiers)
                .filter(|(_, &t)| t == tier)
                .map(|(r, _)| r.snr.unwrap())
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!((mean_snr(0) - 600.0).abs() < 20.0);
        assert!((mean_snr(1) - 200.0).abs() < 10.0);
        assert!((mean_snr(2) - 80.0).abs() < 6.0);
        for r in &g.dataset.records {
            assert!(r.sulfur_count.unwrap() < r.length.unwrap());
        }
    }
}
