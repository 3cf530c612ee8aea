//! Peak and trough detection by topographic prominence.
//!
//! Consecutive equal values are collapsed into one run located at its first
//! sample. A run is a peak when it is strictly above both neighbouring runs;
//! its prominence is its height above the higher of the two lowest points
//! reached before meeting a strictly higher run on each side (or the series
//! edge). Troughs are peaks of the negated series.
//!
//! Nearest-higher runs come from a monotonic stack and valley minima from a
//! sparse table, so the whole pass is `O(n log n)`.

use serde::{Deserialize, Serialize};

use crate::timeline::Sample;

use super::{ActivityIndex, ActivityInterval, AnalyticsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Peak,
    Trough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremumEvent {
    pub kind: ExtremumKind,
    pub t_ms: i64,
    pub value: f64,
    pub prominence: f64,
    pub activity_name: String,
}

struct SparseMin {
    levels: Vec<Vec<f64>>,
}

impl SparseMin {
    fn new(values: &[f64]) -> Self {
        let mut levels = vec![values.to_vec()];
        let mut width = 1;
        while 2 * width <= values.len() {
            let prev = levels.last().unwrap();
            let next: Vec<f64> = (0..=values.len() - 2 * width).map(|i| prev[i].min(prev[i + width])).collect();
            levels.push(next);
            width *= 2;
        }
        Self { levels }
    }

    /// Minimum over the inclusive index range `[lo, hi]`.
    fn min(&self, lo: usize, hi: usize) -> f64 {
        let len = hi - lo + 1;
        let k = usize::BITS as usize - 1 - len.leading_zeros() as usize;
        self.levels[k][lo].min(self.levels[k][hi + 1 - (1 << k)])
    }
}

/// `(run index, prominence)` of every interior peak in `values`, which must
/// have no two equal neighbours.
fn peak_prominences(values: &[f64]) -> Vec<(usize, f64)> {
    let m = values.len();
    if m < 3 {
        return Vec::new();
    }
    let mut left_higher = vec![None; m];
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..m {
        while stack.last().is_some_and(|&j| values[j] <= values[i]) {
            stack.pop();
        }
        left_higher[i] = stack.last().copied();
        stack.push(i);
    }
    let mut right_higher = vec![None; m];
    stack.clear();
    for i in (0..m).rev() {
        while stack.last().is_some_and(|&j| values[j] <= values[i]) {
            stack.pop();
        }
        right_higher[i] = stack.last().copied();
        stack.push(i);
    }

    let mins = SparseMin::new(values);
    (1..m - 1)
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .map(|i| {
            let left_base = mins.min(left_higher[i].map_or(0, |j| j + 1), i - 1);
            let right_base = mins.min(i + 1, right_higher[i].map_or(m - 1, |j| j - 1));
            (i, values[i] - left_base.max(right_base))
        })
        .collect()
}

/// Detect peaks and troughs of a smoothed series whose prominence is at
/// least `prominence_frac` of the series range, labeled by activity and
/// returned in time order.
pub fn detect_extrema(
    smoothed: &[Sample],
    activities: &[ActivityInterval],
    prominence_frac: f64,
) -> Result<Vec<ExtremumEvent>, AnalyticsError> {
    if !(prominence_frac > 0.0 && prominence_frac <= 1.0) {
        return Err(AnalyticsError::InvalidProminence(prominence_frac));
    }
    if smoothed.is_empty() {
        return Err(AnalyticsError::EmptySeries);
    }
    let index = ActivityIndex::new(activities)?;

    let mut runs: Vec<Sample> = Vec::with_capacity(smoothed.len());
    for s in smoothed {
        if runs.last().is_none_or(|r| r.value != s.value) {
            runs.push(*s);
        }
    }
    let lo = runs.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
    let hi = runs.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range == 0.0 {
        return Ok(Vec::new());
    }
    let threshold = prominence_frac * range;

    let values: Vec<f64> = runs.iter().map(|s| s.value).collect();
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    let peaks = peak_prominences(&values).into_iter().map(|p| (ExtremumKind::Peak, p));
    let troughs = peak_prominences(&negated).into_iter().map(|p| (ExtremumKind::Trough, p));

    let mut events: Vec<ExtremumEvent> = peaks
        .chain(troughs)
        .filter(|(_, (_, prominence))| *prominence >= threshold)
        .map(|(kind, (i, prominence))| {
            let s = runs[i];
            ExtremumEvent {
                kind,
                t_ms: s.t_ms,
                value: s.value,
                prominence,
                activity_name: index.label(s.t_ms).to_string(),
            }
        })
        .collect();
    events.sort_by_key(|e| e.t_ms);
    Ok(events)
}
