use crate::timeline::Sample;

use super::{validate_activities, ActivityInterval, AnalyticsError, UNASSIGNED};

/// Start-ordered lookup over validated, pairwise-disjoint intervals.
#[derive(Debug, Clone)]
pub struct ActivityIndex<'a> {
    sorted: Vec<&'a ActivityInterval>,
}

impl<'a> ActivityIndex<'a> {
    pub fn new(activities: &'a [ActivityInterval]) -> Result<Self, AnalyticsError> {
        validate_activities(activities)?;
        let mut sorted: Vec<&ActivityInterval> = activities.iter().collect();
        sorted.sort_by_key(|a| a.start_ms);
        Ok(Self { sorted })
    }

    /// The interval containing `t_ms` under half-open semantics.
    pub fn find(&self, t_ms: i64) -> Option<&'a ActivityInterval> {
        let after = self.sorted.partition_point(|a| a.start_ms <= t_ms);
        let candidate = *self.sorted.get(after.checked_sub(1)?)?;
        candidate.contains(t_ms).then_some(candidate)
    }

    pub fn label(&self, t_ms: i64) -> &'a str {
        self.find(t_ms).map_or(UNASSIGNED, |a| a.name.as_str())
    }

    /// Intervals in start order.
    pub fn intervals(&self) -> &[&'a ActivityInterval] {
        &self.sorted
    }
}

/// Label each sample with the activity whose `[start, end)` span contains
/// it, or [`UNASSIGNED`].
pub fn segment_by_activity<'a>(
    samples: &[Sample],
    activities: &'a [ActivityInterval],
) -> Result<Vec<(Sample, &'a str)>, AnalyticsError> {
    let index = ActivityIndex::new(activities)?;
    Ok(samples.iter().map(|&s| (s, index.label(s.t_ms))).collect())
}
