//! Master-timeline alignment and resampling.
//!
//! Every source device has its own clock. A [`ClockMapping`] is the affine
//! transform `t_master = scale * t_source + offset_ms` that puts its samples
//! on the activity log's clock, which serves as the master timeline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimelineError {
    #[error("no marker pairs supplied")]
    NoMarkers,
    #[error("degenerate markers: all {count} source timestamps equal {t_source_ms}")]
    DegenerateMarkers { count: usize, t_source_ms: i64 },
    #[error("clock scale must be finite and > 0, got {0}")]
    InvalidScale(f64),
    #[error("clock offset must be finite, got {0}")]
    InvalidOffset(f64),
    #[error("resampling needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("time grid needs step_ms > 0 and count > 0 (step {step_ms}, count {count})")]
    InvalidGrid { step_ms: i64, count: usize },
}

/// A timestamped value on the master timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(i64, f64)", into = "(i64, f64)")]
pub struct Sample {
    pub t_ms: i64,
    pub value: f64,
}

impl Sample {
    pub fn new(t_ms: i64, value: f64) -> Self {
        Self { t_ms, value }
    }
}

impl From<(i64, f64)> for Sample {
    fn from((t_ms, value): (i64, f64)) -> Self {
        Self { t_ms, value }
    }
}

impl From<Sample> for (i64, f64) {
    fn from(s: Sample) -> Self {
        (s.t_ms, s.value)
    }
}

/// Affine map from a source clock onto the master timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockMapping {
    pub scale: f64,
    pub offset_ms: f64,
}

impl Default for ClockMapping {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl ClockMapping {
    pub const IDENTITY: ClockMapping = ClockMapping { scale: 1.0, offset_ms: 0.0 };

    pub fn new(scale: f64, offset_ms: f64) -> Result<Self, TimelineError> {
        let m = Self { scale, offset_ms };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), TimelineError> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(TimelineError::InvalidScale(self.scale));
        }
        if !self.offset_ms.is_finite() {
            return Err(TimelineError::InvalidOffset(self.offset_ms));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0 && self.offset_ms == 0.0
    }

    /// Unrounded master time for a source timestamp.
    pub fn map(&self, t_source_ms: f64) -> f64 {
        self.scale * t_source_ms + self.offset_ms
    }

    /// Master time rounded half-away-from-zero to whole milliseconds.
    pub fn map_ms(&self, t_source_ms: i64) -> i64 {
        self.map(t_source_ms as f64).round() as i64
    }

    /// The mapping equivalent to applying `self` and then `then`.
    pub fn then(&self, then: &ClockMapping) -> ClockMapping {
        ClockMapping { scale: then.scale * self.scale, offset_ms: then.scale * self.offset_ms + then.offset_ms }
    }
}

/// Least-squares affine fit of `(t_source_ms, t_master_ms)` marker pairs.
///
/// A single pair pins the scale to 1. Sums are accumulated exactly in `i128`
/// relative to the first marker, so epoch-scale timestamps do not cancel.
pub fn estimate_clock_mapping(markers: &[(i64, i64)]) -> Result<ClockMapping, TimelineError> {
    let (&(x0, y0), _) = markers.split_first().ok_or(TimelineError::NoMarkers)?;
    if markers.len() == 1 {
        return ClockMapping::new(1.0, (y0 - x0) as f64);
    }

    let n = markers.len() as i128;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0i128, 0i128, 0i128, 0i128);
    for &(x, y) in markers {
        let dx = (x - x0) as i128;
        let dy = (y - y0) as i128;
        sx += dx;
        sy += dy;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    let den = n * sxx - sx * sx;
    if den == 0 {
        return Err(TimelineError::DegenerateMarkers { count: markers.len(), t_source_ms: x0 });
    }
    let num = n * sxy - sx * sy;
    let scale = num as f64 / den as f64;
    // intercept of the centred fit, expressed relative to (x0, y0)
    let local = (sy as f64 - scale * sx as f64) / n as f64;
    let offset_ms = (y0 as f64 - scale * x0 as f64) + local;
    ClockMapping::new(scale, offset_ms)
}

/// Map source-clock samples onto the master timeline, preserving order.
pub fn apply_clock_mapping(samples: &[(i64, f64)], mapping: &ClockMapping) -> Vec<Sample> {
    samples.iter().map(|&(t, v)| Sample::new(mapping.map_ms(t), v)).collect()
}

/// Regular grid of master timestamps `start_ms + k * step_ms`, `k < count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start_ms: i64,
    pub step_ms: i64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(start_ms: i64, step_ms: i64, count: usize) -> Result<Self, TimelineError> {
        if step_ms <= 0 || count == 0 {
            return Err(TimelineError::InvalidGrid { step_ms, count });
        }
        Ok(Self { start_ms, step_ms, count })
    }

    /// Grid starting at `start_ms` with every point `<= end_ms`; `None` when
    /// the span is empty.
    pub fn covering(start_ms: i64, end_ms: i64, step_ms: i64) -> Option<Self> {
        if step_ms <= 0 || end_ms < start_ms {
            return None;
        }
        let count = ((end_ms - start_ms) / step_ms) as usize + 1;
        Some(Self { start_ms, step_ms, count })
    }

    pub fn point(&self, k: usize) -> i64 {
        self.start_ms + k as i64 * self.step_ms
    }

    pub fn last(&self) -> i64 {
        self.point(self.count - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.count).map(move |k| self.point(k))
    }
}

/// Linear interpolation of strictly increasing `samples` at each grid point
/// inside `[first.t_ms, last.t_ms]`. Points outside that span are omitted.
pub fn resample_linear(samples: &[Sample], grid: &TimeGrid) -> Result<Vec<Sample>, TimelineError> {
    if samples.len() < 2 {
        return Err(TimelineError::TooFewSamples(samples.len()));
    }
    let first = samples[0].t_ms;
    let last = samples[samples.len() - 1].t_ms;
    let mut out = Vec::with_capacity(grid.count);
    // index of the right end of the current bracketing segment
    let mut hi = 1;
    for t in grid.points() {
        if t < first {
            continue;
        }
        if t > last {
            break;
        }
        while samples[hi].t_ms < t {
            hi += 1;
        }
        let right = samples[hi];
        let value = if right.t_ms == t {
            right.value
        } else {
            let left = samples[hi - 1];
            let frac = (t - left.t_ms) as f64 / (right.t_ms - left.t_ms) as f64;
            left.value + (right.value - left.value) * frac
        };
        out.push(Sample::new(t, value));
    }
    Ok(out)
}
