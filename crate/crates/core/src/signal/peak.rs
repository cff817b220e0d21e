use serde::{Deserialize, Serialize};

use super::{Chromatogram, Result, SignalError, TimeWindow};
use crate::stats::median;

/// Maximum number of idle samples taken on each side of a region for the
/// baseline estimate.
pub const BASELINE_FLANK: usize = 20;
/// Minimum idle samples required on each side of a region.
pub const MIN_FLANK_SAMPLES: usize = 5;
/// Minimum samples in a noise window.
pub const MIN_NOISE_SAMPLES: usize = 20;

/// Boundary fraction of the baseline-corrected apex height.
const BOUNDARY_FRACTION: f64 = 0.01;
/// Detection threshold and valley confirmation, in units of noise.
const NOISE_MULTIPLE: f64 = 3.0;
/// Smallest valley rise, relative to the peak height; keeps rounding jitter
/// on noiseless traces from reading as a valley.
const RISE_FLOOR: f64 = 1e-9;
/// Boundary refinements against the flank baseline.
const MAX_BOUNDARY_PASSES: usize = 8;

/// Sample indices bounding a single peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakRegion {
    pub left: usize,
    pub apex: usize,
    pub right: usize,
}

impl PeakRegion {
    fn validate(&self, chrom: &Chromatogram) -> Result<()> {
        if !(self.left < self.apex && self.apex < self.right && self.right < chrom.len()) {
            return Err(SignalError::InvalidRegion(format!(
                "expected left < apex < right < {}, got {:?}",
                chrom.len(),
                self
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.right - self.left + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Noise floor estimate. `Zero` is kept distinct so that SNR division is
/// never attempted on a residual-free window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Noise {
    Zero,
    Rms(f64),
}

impl Noise {
    pub fn value(&self) -> f64 {
        match *self {
            Noise::Zero => 0.0,
            Noise::Rms(v) => v,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Noise::Zero)
    }
}

/// Quality measurements of one peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakMetrics {
    /// Minutes.
    pub retention_time: f64,
    pub height: f64,
    pub snr: f64,
    pub skewness: f64,
    pub area: f64,
}

/// Robust global level and noise used only for peak detection: the median
/// intensity and a MAD estimate over first differences.
fn detection_level_and_noise(y: &[f64]) -> (f64, f64) {
    let level = median(y);
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let center = median(&diffs);
    let dev: Vec<f64> = diffs.iter().map(|d| (d - center).abs()).collect();
    let noise = 1.4826 * median(&dev) / std::f64::consts::SQRT_2;
    (level, noise)
}

/// Locates the most intense peak inside `window`.
///
/// The apex is the first maximum inside the window. Boundaries are found by
/// walking outward until the level-corrected intensity falls below 1% of the
/// corrected apex height, or a valley is confirmed (the trace rises more than
/// 3x noise above the lowest point seen so far; with zero noise this is a
/// local minimum beyond rounding jitter), whichever happens first.
pub fn detect_peak(chrom: &Chromatogram, window: TimeWindow) -> Result<PeakRegion> {
    let range = chrom.index_range(window);
    if range.is_empty() {
        return Err(SignalError::WindowOutOfRange {
            start: window.start,
            end: window.end,
        });
    }
    let y = chrom.intensities();
    let (level, noise) = detection_level_and_noise(y);

    let mut apex = range.start;
    for i in range.clone() {
        if y[i] > y[apex] {
            apex = i;
        }
    }
    let not_found = SignalError::NoPeakFound {
        start: window.start,
        end: window.end,
    };
    if y[apex] <= level + NOISE_MULTIPLE * noise || apex == 0 || apex == y.len() - 1 {
        return Err(not_found);
    }

    let rise = (NOISE_MULTIPLE * noise).max(RISE_FLOOR * (y[apex] - level));
    let walk = |c: &dyn Fn(usize) -> f64, indices: &mut dyn Iterator<Item = usize>| -> usize {
        let cutoff = BOUNDARY_FRACTION * c(apex);
        let mut lowest = apex;
        for j in indices {
            if c(j) < c(lowest) {
                lowest = j;
            }
            if c(j) < cutoff {
                return j;
            }
            if c(j) > c(lowest) + rise {
                return lowest;
            }
        }
        lowest
    };
    let bounds = |c: &dyn Fn(usize) -> f64| {
        let left = walk(c, &mut (0..apex).rev());
        let right = walk(c, &mut (apex + 1..y.len()));
        PeakRegion {
            left: if left == apex { apex - 1 } else { left },
            apex,
            right: if right == apex { apex + 1 } else { right },
        }
    };

    // First pass against the global level, then re-walk against the flank
    // baseline so a sloped baseline does not cut the peak short. Passes only
    // widen the region: shrinking would pull peak tails into the flanks and
    // feed back into a higher baseline.
    let mut region = bounds(&|j| y[j] - level);
    for _ in 0..MAX_BOUNDARY_PASSES {
        let Ok(base) = baseline_line(chrom, region) else { break };
        let t = chrom.times();
        let next = bounds(&|j| y[j] - base.at(t[j]));
        let wider = PeakRegion {
            left: next.left.min(region.left),
            apex,
            right: next.right.max(region.right),
        };
        if wider == region {
            break;
        }
        region = wider;
    }
    Ok(region)
}

/// Line through the flank medians; see [`estimate_baseline`].
struct BaselineLine {
    t0: f64,
    y0: f64,
    slope: f64,
}

impl BaselineLine {
    fn at(&self, t: f64) -> f64 {
        self.y0 + self.slope * (t - self.t0)
    }
}

fn baseline_line(chrom: &Chromatogram, region: PeakRegion) -> Result<BaselineLine> {
    let n = chrom.len();
    let left_start = region.left.saturating_sub(BASELINE_FLANK);
    let right_end = (region.right + 1 + BASELINE_FLANK).min(n);
    let left = left_start..region.left;
    let right = region.right + 1..right_end;
    for flank in [&left, &right] {
        if flank.len() < MIN_FLANK_SAMPLES {
            return Err(SignalError::InsufficientIdleSamples {
                needed: MIN_FLANK_SAMPLES,
                found: flank.len(),
            });
        }
    }
    let t = chrom.times();
    let y = chrom.intensities();
    let (tl, yl) = (median(&t[left.clone()]), median(&y[left]));
    let (tr, yr) = (median(&t[right.clone()]), median(&y[right]));
    Ok(BaselineLine {
        t0: tl,
        y0: yl,
        slope: (yr - yl) / (tr - tl),
    })
}

/// Linear baseline under a peak.
///
/// Each flank (up to [`BASELINE_FLANK`] idle samples immediately outside the
/// region) is summarised by its median time and median intensity; the
/// baseline is the line through those two points, evaluated at every region
/// sample. A linear trace is reproduced exactly.
pub fn estimate_baseline(chrom: &Chromatogram, region: PeakRegion) -> Result<Vec<f64>> {
    region.validate(chrom)?;
    let line = baseline_line(chrom, region)?;
    Ok(chrom.times()[region.left..=region.right]
        .iter()
        .map(|&t| line.at(t))
        .collect())
}

/// RMS of residuals after removing a least-squares line over `idle_window`.
pub fn estimate_noise(chrom: &Chromatogram, idle_window: TimeWindow) -> Result<Noise> {
    let range = chrom.index_range(idle_window);
    noise_over(
        &chrom.times()[range.clone()],
        &chrom.intensities()[range],
    )
}

fn noise_over(t: &[f64], y: &[f64]) -> Result<Noise> {
    if t.len() < MIN_NOISE_SAMPLES {
        return Err(SignalError::InsufficientIdleSamples {
            needed: MIN_NOISE_SAMPLES,
            found: t.len(),
        });
    }
    let n = t.len() as f64;
    let t_mean = t.iter().sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        sxy += (ti - t_mean) * (yi - y_mean);
        sxx += (ti - t_mean) * (ti - t_mean);
    }
    let slope = sxy / sxx;
    let ss: f64 = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = yi - y_mean - slope * (ti - t_mean);
            r * r
        })
        .sum();
    let rms = (ss / n).sqrt();
    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    if rms <= 1e-12 * scale {
        Ok(Noise::Zero)
    } else {
        Ok(Noise::Rms(rms))
    }
}

/// Baseline-corrected height over RMS noise.
pub fn compute_snr(height: f64, noise: f64) -> Result<f64> {
    if !(noise > 0.0) {
        return Err(SignalError::ZeroNoise);
    }
    if !(height > 0.0) {
        return Err(SignalError::NonPositiveHeight(height));
    }
    Ok(height / noise)
}

fn corrected(chrom: &Chromatogram, region: PeakRegion, baseline: &[f64]) -> Result<Vec<f64>> {
    region.validate(chrom)?;
    if baseline.len() != region.len() {
        return Err(SignalError::InvalidRegion(format!(
            "baseline has {} values for a region of {} samples",
            baseline.len(),
            region.len()
        )));
    }
    Ok(chrom.intensities()[region.left..=region.right]
        .iter()
        .zip(baseline)
        .map(|(y, b)| y - b)
        .collect())
}

/// Vertex of the parabola through the apex and its two neighbours, as
/// (time, corrected height). Falls back to the apex sample when the three
/// points are not strictly concave.
fn refine_apex(t: &[f64], c: &[f64], k: usize) -> (f64, f64) {
    let (t0, t1, t2) = (t[k - 1], t[k], t[k + 1]);
    let (y0, y1, y2) = (c[k - 1], c[k], c[k + 1]);
    let d01 = (y1 - y0) / (t1 - t0);
    let d12 = (y2 - y1) / (t2 - t1);
    let curvature = (d12 - d01) / (t2 - t0);
    if !(curvature < 0.0) {
        return (t1, y1);
    }
    // y = y1 + b (t - t1) + a (t - t1)^2
    let a = curvature;
    let b = d01 + a * (t1 - t0);
    let dt = (-b / (2.0 * a)).clamp(t0 - t1, t2 - t1);
    (t1 + dt, y1 + b * dt + a * dt * dt)
}

/// Ratio of the right to left horizontal distance from the apex to where
/// the corrected trace crosses `fraction` of the apex height.
///
/// The apex position and height come from a three-point parabolic
/// refinement; crossings are located by linear interpolation between the
/// bracketing samples. 1 means symmetric, > 1 tailing, < 1 fronting.
pub fn compute_skewness(
    chrom: &Chromatogram,
    region: PeakRegion,
    baseline: &[f64],
    fraction: f64,
) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(SignalError::InvalidParameter(format!(
            "fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let c = corrected(chrom, region, baseline)?;
    let t = &chrom.times()[region.left..=region.right];
    let k = region.apex - region.left;
    let (t_apex, height) = refine_apex(t, &c, k);
    if !(height > 0.0) {
        return Err(SignalError::NonPositiveHeight(height));
    }
    let level = fraction * height;
    let cross = |a: usize, b: usize| t[a] + (level - c[a]) / (c[b] - c[a]) * (t[b] - t[a]);

    let left = (0..k)
        .rev()
        .find(|&j| c[j] < level)
        .map(|j| cross(j, j + 1))
        .ok_or(SignalError::LevelNotBracketed { side: "left", level })?;
    let right = (k + 1..c.len())
        .find(|&j| c[j] < level)
        .map(|j| cross(j, j - 1))
        .ok_or(SignalError::LevelNotBracketed { side: "right", level })?;

    Ok((right - t_apex) / (t_apex - left))
}

/// Trapezoidal integral of the baseline-corrected trace over the region.
/// Negative lobes are integrated as-is; a negative total is logged.
pub fn compute_area(chrom: &Chromatogram, region: PeakRegion, baseline: &[f64]) -> Result<f64> {
    let c = corrected(chrom, region, baseline)?;
    let t = &chrom.times()[region.left..=region.right];
    let area: f64 = t
        .windows(2)
        .zip(c.windows(2))
        .map(|(tw, cw)| 0.5 * (cw[0] + cw[1]) * (tw[1] - tw[0]))
        .sum();
    if area < 0.0 {
        log::warn!("negative peak area {area} for {}", chrom.id());
    }
    Ok(area)
}

/// Retention-time drift between two replicate runs (minutes).
pub fn delta_tr(tr_run1: f64, tr_run2: f64) -> f64 {
    tr_run1 - tr_run2
}

/// Parameters for [`measure_peak`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakQuery {
    pub search_window: TimeWindow,
    /// Noise window; when absent the idle samples before the peak region are
    /// used, or after it if fewer than [`MIN_NOISE_SAMPLES`] precede it.
    pub idle_window: Option<TimeWindow>,
    pub fraction: f64,
}

impl PeakQuery {
    pub fn new(search_window: TimeWindow) -> Self {
        Self {
            search_window,
            idle_window: None,
            fraction: 0.5,
        }
    }
}

/// Full measurement of a single peak.
pub fn measure_peak(chrom: &Chromatogram, query: &PeakQuery) -> Result<PeakMetrics> {
    let region = detect_peak(chrom, query.search_window)?;
    let baseline = estimate_baseline(chrom, region)?;
    let k = region.apex - region.left;
    let height = chrom.intensities()[region.apex] - baseline[k];

    let noise = match query.idle_window {
        Some(w) => estimate_noise(chrom, w)?,
        None => {
            let (t, y) = (chrom.times(), chrom.intensities());
            if region.left >= MIN_NOISE_SAMPLES {
                noise_over(&t[..region.left], &y[..region.left])?
            } else {
                noise_over(&t[region.right + 1..], &y[region.right + 1..])?
            }
        }
    };
    let snr = compute_snr(height, noise.value())?;
    let skewness = compute_skewness(chrom, region, &baseline, query.fraction)?;
    let area = compute_area(chrom, region, &baseline)?;

    let c = corrected(chrom, region, &baseline)?;
    let (t_apex, _) = refine_apex(&chrom.times()[region.left..=region.right], &c, k);
    Ok(PeakMetrics {
        retention_time: t_apex / 60.0,
        height,
        snr,
        skewness,
        area,
    })
}
