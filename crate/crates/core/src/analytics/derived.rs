use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::ingest::TestResult;

use super::{
    compare_tests, correlate_streams, detect_extrema, session_activity_stats, smooth_sliding_window_with,
    ActivityInterval, ActivityStats, AnalyticsError, CorrelationMatrix, ExtremumEvent, SignalStream, StreamKey,
    TestComparison, DEFAULT_PROMINENCE_FRAC, DEFAULT_STEP_MS, DEFAULT_WINDOW_MS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticsParams {
    pub window_ms: u64,
    pub step_ms: i64,
    pub prominence_frac: f64,
}

impl Default for AnalyticsParams {
    fn default() -> Self {
        Self { window_ms: DEFAULT_WINDOW_MS, step_ms: DEFAULT_STEP_MS, prominence_frac: DEFAULT_PROMINENCE_FRAC }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamExtrema {
    pub stream: StreamKey,
    pub events: Vec<ExtremumEvent>,
}

impl StreamExtrema {
    /// Smooth `stream` with `window_ms` and detect its extrema.
    pub fn compute(
        stream: &SignalStream,
        activities: &[ActivityInterval],
        window_ms: u64,
        prominence_frac: f64,
        exec: Exec,
    ) -> Result<Self, AnalyticsError> {
        let smoothed = smooth_sliding_window_with(&stream.samples, window_ms, exec);
        Ok(Self { stream: stream.key(), events: detect_extrema(&smoothed, activities, prominence_frac)? })
    }
}

/// Everything the dashboard shows for one activity list, tagged with the
/// activity version it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedAnalytics {
    pub activities_version: u64,
    pub params: AnalyticsParams,
    pub activity_stats: Vec<ActivityStats>,
    /// `None` for single-stream sessions.
    pub correlations: Option<CorrelationMatrix>,
    pub extrema: Vec<StreamExtrema>,
    pub test_comparison: Option<TestComparison>,
}

impl DerivedAnalytics {
    pub fn compute(
        streams: &[SignalStream],
        activities: &[ActivityInterval],
        tests: Option<(&TestResult, &TestResult)>,
        activities_version: u64,
        params: AnalyticsParams,
        exec: Exec,
    ) -> Result<Self, AnalyticsError> {
        let activity_stats = session_activity_stats(streams, activities, exec)?;
        let correlations =
            if streams.len() >= 2 { Some(correlate_streams(streams, params.step_ms, None, exec)?) } else { None };
        // per-point smoothing is already parallel; keep the outer loop sequential
        let extrema = streams
            .iter()
            .map(|s| StreamExtrema::compute(s, activities, params.window_ms, params.prominence_frac, exec))
            .collect::<Result<Vec<_>, _>>()?;
        let test_comparison = tests.map(|(pre, post)| compare_tests(pre, post)).transpose()?;
        Ok(Self { activities_version, params, activity_stats, correlations, extrema, test_comparison })
    }
}
