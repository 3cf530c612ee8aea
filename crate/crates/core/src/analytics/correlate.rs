use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::timeline::{resample_linear, TimeGrid};

use super::{ActivityInterval, AnalyticsError, SignalStream, StreamKey};

/// Pairwise Pearson correlations. `r[i][j]` is `None` when the pair shares
/// fewer than two grid points or either resampled series is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub labels: Vec<StreamKey>,
    pub r: Vec<Vec<Option<f64>>>,
    pub n_common: Vec<Vec<usize>>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.r[i][j]
    }
}

/// Pearson's r by the two-pass centred formula, clamped to `[-1, 1]`.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Grid over the intersection of both streams' spans (optionally clipped to
/// one activity's half-open span), starting at the intersection start.
pub fn pair_grid(
    a: &SignalStream,
    b: &SignalStream,
    step_ms: i64,
    within: Option<&ActivityInterval>,
) -> Option<TimeGrid> {
    let (a0, a1) = a.span()?;
    let (b0, b1) = b.span()?;
    let mut start = a0.max(b0);
    let mut end = a1.min(b1);
    if let Some(w) = within {
        start = start.max(w.start_ms);
        end = end.min(w.end_ms - 1);
    }
    TimeGrid::covering(start, end, step_ms)
}

fn correlate_pair(
    a: &SignalStream,
    b: &SignalStream,
    step_ms: i64,
    within: Option<&ActivityInterval>,
) -> (Option<f64>, usize) {
    let Some(grid) = pair_grid(a, b, step_ms, within) else {
        return (None, 0);
    };
    let (Ok(ra), Ok(rb)) = (resample_linear(&a.samples, &grid), resample_linear(&b.samples, &grid)) else {
        return (None, 0);
    };
    debug_assert_eq!(ra.len(), rb.len());
    let xs: Vec<f64> = ra.iter().map(|s| s.value).collect();
    let ys: Vec<f64> = rb.iter().map(|s| s.value).collect();
    (pearson(&xs, &ys), xs.len())
}

/// Correlate every pair of cleaned streams on a shared `step_ms` grid.
///
/// `within` restricts the grid to one activity span. The diagonal is fixed
/// at 1 with `n_common[i][i]` counting the stream's own grid points.
pub fn correlate_streams(
    streams: &[SignalStream],
    step_ms: i64,
    within: Option<&ActivityInterval>,
    exec: Exec,
) -> Result<CorrelationMatrix, AnalyticsError> {
    if streams.len() < 2 {
        return Err(AnalyticsError::TooFewStreams(streams.len()));
    }
    if step_ms <= 0 {
        return Err(AnalyticsError::InvalidStep(step_ms));
    }
    let n = streams.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let results = exec.map_slice(&pairs, |&(i, j)| correlate_pair(&streams[i], &streams[j], step_ms, within));

    let mut r = vec![vec![None; n]; n];
    let mut n_common = vec![vec![0; n]; n];
    for (i, s) in streams.iter().enumerate() {
        r[i][i] = Some(1.0);
        n_common[i][i] = pair_grid(s, s, step_ms, within).map_or(0, |g| g.count);
    }
    for (&(i, j), (value, count)) in pairs.iter().zip(results) {
        r[i][j] = value;
        r[j][i] = value;
        n_common[i][j] = count;
        n_common[j][i] = count;
    }
    Ok(CorrelationMatrix { labels: streams.iter().map(SignalStream::key).collect(), r, n_common })
}
