//! Per-session signal analytics: cleaning, sliding-window smoothing,
//! activity segmentation, per-activity statistics, cross-stream
//! correlation, extrema detection and pre/post test comparison.
//!
//! All functions are pure. The heavy loops accept an [`Exec`] so callers
//! (and the benches) can pick sequential or rayon-backed execution.

mod assessment;
mod clean;
mod correlate;
mod derived;
mod extrema;
mod segment;
mod smooth;
mod stats;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use assessment::{compare_tests, TestComparison};
pub use clean::{clean_signal, CleaningReport, ValidRange, ValidRanges};
pub use correlate::{correlate_streams, pair_grid, pearson, CorrelationMatrix};
pub use derived::{AnalyticsParams, DerivedAnalytics, StreamExtrema};
pub use extrema::{detect_extrema, ExtremumEvent, ExtremumKind};
pub use segment::{segment_by_activity, ActivityIndex};
pub use smooth::{smooth_sliding_window, smooth_sliding_window_with};
pub use stats::{activity_stats, rank_activities, session_activity_stats, ActivityStats};

#[cfg(doc)]
use crate::exec::Exec;
use crate::ingest::Modality;
use crate::timeline::Sample;

/// Label for samples that fall outside every activity interval.
pub const UNASSIGNED: &str = "unassigned";

pub const DEFAULT_WINDOW_MS: u64 = 30_000;
pub const DEFAULT_STEP_MS: i64 = 1_000;
pub const DEFAULT_PROMINENCE_FRAC: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("stream {0} is already cleaned")]
    AlreadyCleaned(StreamKey),
    #[error("stream {0} is not cleaned")]
    NotCleaned(StreamKey),
    #[error("every sample of stream {0} was dropped during cleaning")]
    AllSamplesDropped(StreamKey),
    #[error("activities overlap: {first} and {second}")]
    OverlappingActivities { first: ActivityInterval, second: ActivityInterval },
    #[error("invalid activity {activity}: {message}")]
    InvalidActivity { activity: ActivityInterval, message: String },
    #[error("no statistics for stream {modality}/{source_id}")]
    NoSuchModality { modality: Modality, source_id: String },
    #[error("pretest max_score {pre} differs from posttest max_score {post}")]
    MismatchedScales { pre: f64, post: f64 },
    #[error("prominence_frac must be in (0, 1], got {0}")]
    InvalidProminence(f64),
    #[error("series is empty")]
    EmptySeries,
    #[error("correlation needs at least 2 streams, got {0}")]
    TooFewStreams(usize),
    #[error("step_ms must be > 0, got {0}")]
    InvalidStep(i64),
}

/// Identity of one stream within a session.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub modality: Modality,
    pub source_id: String,
}

impl StreamKey {
    pub fn new(modality: Modality, source_id: impl Into<String>) -> Self {
        Self { modality, source_id: source_id.into() }
    }
}

impl fmt::Display for StreamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.modality, self.source_id)
    }
}

/// One modality from one source device, on the master timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalStream {
    pub modality: Modality,
    pub source_id: String,
    pub samples: Vec<Sample>,
    pub cleaned: bool,
}

impl SignalStream {
    pub fn new(modality: Modality, source_id: impl Into<String>, samples: Vec<Sample>) -> Self {
        Self { modality, source_id: source_id.into(), samples, cleaned: false }
    }

    pub fn key(&self) -> StreamKey {
        StreamKey::new(self.modality, self.source_id.clone())
    }

    pub fn matches(&self, modality: Modality, source_id: &str) -> bool {
        self.modality == modality && self.source_id == source_id
    }

    /// `(first, last)` timestamps, if any.
    pub fn span(&self) -> Option<(i64, i64)> {
        Some((self.samples.first()?.t_ms, self.samples.last()?.t_ms))
    }
}

/// Half-open span `[start_ms, end_ms)` of master time spent on one task.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityInterval {
    pub name: String,
    pub start_ms: i64,
    pub end_ms: i64,
}

impl ActivityInterval {
    pub fn new(name: impl Into<String>, start_ms: i64, end_ms: i64) -> Self {
        Self { name: name.into(), start_ms, end_ms }
    }

    pub fn contains(&self, t_ms: i64) -> bool {
        self.start_ms <= t_ms && t_ms < self.end_ms
    }
}

impl fmt::Display for ActivityInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}` [{}, {})", self.name, self.start_ms, self.end_ms)
    }
}

/// Check per-interval invariants and pairwise disjointness. Overlaps are
/// reported for the first offending pair in start order.
pub fn validate_activities(activities: &[ActivityInterval]) -> Result<(), AnalyticsError> {
    for a in activities {
        let message = if a.name.trim().is_empty() {
            "name must not be empty"
        } else if a.name == UNASSIGNED {
            "name is reserved"
        } else if a.start_ms >= a.end_ms {
            "start_ms must be < end_ms"
        } else {
            continue;
        };
        return Err(AnalyticsError::InvalidActivity { activity: a.clone(), message: message.into() });
    }
    let mut order: Vec<&ActivityInterval> = activities.iter().collect();
    order.sort_by_key(|a| (a.start_ms, a.end_ms));
    for w in order.windows(2) {
        if w[1].start_ms < w[0].end_ms {
            return Err(AnalyticsError::OverlappingActivities { first: w[0].clone(), second: w[1].clone() });
        }
    }
    Ok(())
}
