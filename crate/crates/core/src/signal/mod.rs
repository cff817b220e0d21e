//! Chromatographic signal processing.
//!
//! A detector trace is modelled as baseline + peak + noise. This module
//! localises a peak, estimates its baseline and noise floor, and derives the
//! quality measurements used downstream: SNR, half-height skewness, peak
//! area and retention-time drift between replicate runs.

mod chromatogram;
mod peak;
mod synth;

pub use chromatogram::{Chromatogram, TimeWindow};
pub use peak::{
    compute_area, compute_skewness, compute_snr, delta_tr, detect_peak, estimate_baseline,
    estimate_noise, measure_peak, Noise, PeakMetrics, PeakQuery, PeakRegion, BASELINE_FLANK,
    MIN_FLANK_SAMPLES, MIN_NOISE_SAMPLES,
};
pub use synth::{emg, emg_apex_offset, erfcx, synthesize_chromatogram, SyntheticPeakSpec};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("invalid chromatogram: {0}")]
    InvalidChromatogram(String),
    #[error("window [{start}, {end}] does not overlap the chromatogram")]
    WindowOutOfRange { start: f64, end: f64 },
    #[error("no peak above baseline + 3x noise in [{start}, {end}]")]
    NoPeakFound { start: f64, end: f64 },
    #[error("invalid peak region: {0}")]
    InvalidRegion(String),
    #[error("insufficient idle samples: need {needed}, found {found}")]
    InsufficientIdleSamples { needed: usize, found: usize },
    #[error("noise estimate is zero")]
    ZeroNoise,
    #[error("peak height must be positive, got {0}")]
    NonPositiveHeight(f64),
    #[error("level {level} is not crossed on the {side} side of the apex")]
    LevelNotBracketed { side: &'static str, level: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SignalError> = std::result::Result<T, E>;
