use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Chromatogram, Result, SignalError};
use crate::seed::{derive_seed, rng};

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// One peak of a synthetic chromatogram, together with the baseline and
/// noise it contributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticPeakSpec {
    /// Time of the peak maximum (seconds).
    pub apex_time: f64,
    /// Height of the underlying Gaussian; the EMG area is
    /// `amplitude * sigma * sqrt(2 pi)` for every `tau`.
    pub amplitude: f64,
    pub sigma: f64,
    /// Exponential tailing constant; 0 gives a pure Gaussian.
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub baseline_offset: f64,
    #[serde(default)]
    pub baseline_slope: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

impl SyntheticPeakSpec {
    pub fn gaussian(apex_time: f64, amplitude: f64, sigma: f64) -> Self {
        Self {
            apex_time,
            amplitude,
            sigma,
            tau: 0.0,
            baseline_offset: 0.0,
            baseline_slope: 0.0,
            noise_sigma: 0.0,
            rng_seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.sigma > 0.0
            && self.amplitude > 0.0
            && self.tau >= 0.0
            && self.noise_sigma >= 0.0
            && self.apex_time.is_finite()
            && self.baseline_offset.is_finite()
            && self.baseline_slope.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SignalError::InvalidParameter(format!("peak spec {self:?}")))
        }
    }

    /// Peak value (no baseline, no noise) at time `t`.
    pub fn peak_at(&self, t: f64) -> f64 {
        let center = self.apex_time - emg_apex_offset(self.sigma, self.tau);
        emg(t, center, self.amplitude, self.sigma, self.tau)
    }
}

/// Scaled complementary error function `exp(z^2) erfc(z)`.
pub fn erfcx(z: f64) -> f64 {
    if z < 25.0 {
        (z * z).exp() * libm::erfc(z)
    } else {
        // Asymptotic expansion; the next term is below 1e-12 relative here.
        let z2 = z * z;
        let inv = 1.0 / (2.0 * z2);
        (1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv) / (z * SQRT_PI)
    }
}

/// Exponentially modified Gaussian: a Gaussian of height `amplitude` centred
/// on `center`, convolved with a unit-area exponential of time constant `tau`.
pub fn emg(t: f64, center: f64, amplitude: f64, sigma: f64, tau: f64) -> f64 {
    let u = t - center;
    if tau <= 0.0 {
        return amplitude * (-0.5 * u * u / (sigma * sigma)).exp();
    }
    let ratio = sigma / tau;
    let z = (ratio - u / sigma) / std::f64::consts::SQRT_2;
    let prefactor = amplitude * ratio * (std::f64::consts::PI / 2.0).sqrt();
    if z >= 0.0 {
        prefactor * (-0.5 * u * u / (sigma * sigma)).exp() * erfcx(z)
    } else {
        prefactor * (0.5 * ratio * ratio - u / tau).exp() * libm::erfc(z)
    }
}

/// Offset of the EMG maximum from the Gaussian centre.
///
/// The derivative of the log-density vanishes where
/// `erfcx(z) = tau * sqrt(2 / pi) / sigma`; `erfcx` is decreasing, so the
/// root is found by bisection.
pub fn emg_apex_offset(sigma: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let target = tau * (2.0 / std::f64::consts::PI).sqrt() / sigma;
    let mut lo = -26.0_f64;
    let mut hi = (2.0 / (target * SQRT_PI)).max(2.0);
    while erfcx(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if erfcx(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    let z = 0.5 * (lo + hi);
    sigma * (sigma / tau - std::f64::consts::SQRT_2 * z)
}

/// Generates `baseline + sum(peaks) + noise` sampled at `t_i = i / sample_rate`
/// for `i = 0..=floor(duration * sample_rate)`.
///
/// Each spec's noise stream is seeded from `(seed, spec.rng_seed, spec index)`
/// so output is bit-identical for a fixed seed.
pub fn synthesize_chromatogram(
    id: impl Into<String>,
    specs: &[SyntheticPeakSpec],
    duration: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<Chromatogram> {
    if !(duration > 0.0 && sample_rate > 0.0) {
        return Err(SignalError::InvalidParameter(format!(
            "duration {duration} and sample_rate {sample_rate} must be positive"
        )));
    }
    for spec in specs {
        spec.validate()?;
    }
    let n = (duration * sample_rate).floor() as usize + 1;
    let times: Vec<f64> = (0..n).map(|i| i as f64 / sample_rate).collect();
    let mut intensities = vec![0.0; n];
    for (k, spec) in specs.iter().enumerate() {
        let center = spec.apex_time - emg_apex_offset(spec.sigma, spec.tau);
        for (y, &t) in intensities.iter_mut().zip(&times) {
            *y += spec.baseline_offset
                + spec.baseline_slope * t
                + emg(t, center, spec.amplitude, spec.sigma, spec.tau);
        }
        if spec.noise_sigma > 0.0 {
            let mut r = rng(derive_seed(seed, "synth-noise", spec.rng_seed ^ ((k as u64) << 32)));
            let normal = Normal::new(0.0, spec.noise_sigma)
                .map_err(|e| SignalError::InvalidParameter(e.to_string()))?;
            for y in intensities.iter_mut() {
                *y += normal.sample(&mut r);
            }
        }
    }
    Chromatogram::new(id, times, intensities)
}
