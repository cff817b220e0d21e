use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Result, SignalError};

/// A closed time interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: f64,
    pub end: f64,
}

impl TimeWindow {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

/// A time-ordered detector trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromatogram {
    id: String,
    times: Vec<f64>,
    intensities: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Sample {
    time_s: f64,
    intensity: f64,
}

impl Chromatogram {
    pub fn new(id: impl Into<String>, times: Vec<f64>, intensities: Vec<f64>) -> Result<Self> {
        if times.len() != intensities.len() {
            return Err(SignalError::InvalidChromatogram(format!(
                "{} times but {} intensities",
                times.len(),
                intensities.len()
            )));
        }
        if times.len() < 3 {
            return Err(SignalError::InvalidChromatogram(
                "at least 3 samples are required".into(),
            ));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(SignalError::InvalidChromatogram(format!(
                "times not strictly increasing at sample {}",
                i + 1
            )));
        }
        if times.iter().chain(&intensities).any(|v| !v.is_finite()) {
            return Err(SignalError::InvalidChromatogram(
                "non-finite time or intensity".into(),
            ));
        }
        Ok(Self {
            id: id.into(),
            times,
            intensities,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index range of samples whose time lies inside `window`.
    pub fn index_range(&self, window: TimeWindow) -> Range<usize> {
        let start = self.times.partition_point(|&t| t < window.start);
        let end = self.times.partition_point(|&t| t <= window.end);
        start..end.max(start)
    }

    /// Time-reversed copy: `t' = t_first + t_last - t`, samples in reverse order.
    pub fn mirrored(&self) -> Self {
        let span = self.times[0] + self.times[self.len() - 1];
        Self {
            id: self.id.clone(),
            times: self.times.iter().rev().map(|t| span - t).collect(),
            intensities: self.intensities.iter().rev().copied().collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            id: self.id.clone(),
            times: self.times.clone(),
            intensities: self.intensities.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn shifted(&self, dt: f64) -> Self {
        Self {
            id: self.id.clone(),
            times: self.times.iter().map(|t| t + dt).collect(),
            intensities: self.intensities.clone(),
        }
    }

    /// Reads a `time_s,intensity` CSV.
    pub fn from_reader(id: impl Into<String>, reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["time_s", "intensity"] {
            return Err(SignalError::InvalidChromatogram(format!(
                "expected header `time_s,intensity`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut times = Vec::new();
        let mut intensities = Vec::new();
        for row in rdr.deserialize() {
            let s: Sample = row?;
            times.push(s.time_s);
            intensities.push(s.intensity);
        }
        Self::new(id, times, intensities)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_reader(id, std::fs::File::open(path)?)
    }

    pub fn to_writer(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for (&time_s, &intensity) in self.times.iter().zip(&self.intensities) {
            wtr.serialize(Sample { time_s, intensity })?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_writer(std::fs::File::create(path)?)
    }
}
