use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::exec::Exec;
use crate::ingest::Modality;
use crate::timeline::Sample;

use super::{
    segment_by_activity, ActivityIndex, ActivityInterval, AnalyticsError, SignalStream, StreamKey, UNASSIGNED,
};

/// Summary of one stream's samples within one activity. `stddev` is the
/// population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityStats {
    pub activity_name: String,
    pub modality: Modality,
    pub source_id: String,
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub stddev: f64,
}

fn summarize(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = (values.iter().sum::<f64>() / n).clamp(min, max);
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, min, max, var.sqrt())
}

/// Names in first-start order with [`UNASSIGNED`] last. Repeated names share
/// one entry positioned by their earliest interval.
fn activity_order(activities: &[ActivityInterval]) -> Vec<&str> {
    let mut sorted: Vec<&ActivityInterval> = activities.iter().collect();
    sorted.sort_by_key(|a| a.start_ms);
    let mut names: Vec<&str> = Vec::new();
    for a in sorted {
        if !names.contains(&a.name.as_str()) {
            names.push(&a.name);
        }
    }
    names.push(UNASSIGNED);
    names
}

/// Per-activity statistics for one stream's labeled samples. Activities with
/// no samples are omitted; [`UNASSIGNED`] is reported last when non-empty.
pub fn activity_stats(
    key: &StreamKey,
    labeled: &[(Sample, &str)],
    activities: &[ActivityInterval],
) -> Vec<ActivityStats> {
    let mut groups: HashMap<&str, Vec<f64>> = HashMap::new();
    for (s, name) in labeled {
        groups.entry(name).or_default().push(s.value);
    }
    let mut order = activity_order(activities);
    // labels not present in `activities` still get reported, after the rest
    let mut extra: Vec<&str> = groups.keys().copied().filter(|k| !order.contains(k)).collect();
    extra.sort_unstable();
    order.extend(extra);

    order
        .into_iter()
        .filter_map(|name| {
            let values = groups.get(name)?;
            let (mean, min, max, stddev) = summarize(values);
            Some(ActivityStats {
                activity_name: name.to_string(),
                modality: key.modality,
                source_id: key.source_id.clone(),
                n: values.len(),
                mean,
                min,
                max,
                stddev,
            })
        })
        .collect()
}

/// [`activity_stats`] for every stream, concatenated in stream order.
pub fn session_activity_stats(
    streams: &[SignalStream],
    activities: &[ActivityInterval],
    exec: Exec,
) -> Result<Vec<ActivityStats>, AnalyticsError> {
    ActivityIndex::new(activities)?;
    let per_stream = exec.try_map_slice(streams, |s| {
        let labeled = segment_by_activity(&s.samples, activities)?;
        Ok::<_, AnalyticsError>(activity_stats(&s.key(), &labeled, activities))
    })?;
    Ok(per_stream.into_iter().flatten().collect())
}

/// Activities for one stream ordered by mean, highest first. Ties go to the
/// activity that started earlier; [`UNASSIGNED`] ranks after all named
/// activities on a tie.
pub fn rank_activities(
    stats: &[ActivityStats],
    modality: Modality,
    source_id: &str,
    activities: &[ActivityInterval],
) -> Result<Vec<(String, f64)>, AnalyticsError> {
    let order = activity_order(activities);
    let position = |name: &str| order.iter().position(|n| *n == name).unwrap_or(order.len());
    let mut ranked: Vec<(&ActivityStats, usize)> = stats
        .iter()
        .filter(|s| s.modality == modality && s.source_id == source_id)
        .map(|s| (s, position(&s.activity_name)))
        .collect();
    if ranked.is_empty() {
        return Err(AnalyticsError::NoSuchModality { modality, source_id: source_id.to_string() });
    }
    ranked.sort_by(|(a, pa), (b, pb)| b.mean.total_cmp(&a.mean).then(pa.cmp(pb)));
    Ok(ranked.into_iter().map(|(s, _)| (s.activity_name.clone(), s.mean)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> StreamKey {
        StreamKey::new(Modality::Attention, "eeg")
    }

    fn stat(name: &str, mean: f64) -> ActivityStats {
        ActivityStats {
            activity_name: name.into(),
            modality: Modality::Attention,
            source_id: "eeg".into(),
            n: 1,
            mean,
            min: mean,
            max: mean,
            stddev: 0.0,
        }
    }

    #[test]
    fn constant_activity() {
        let acts = [ActivityInterval::new("a", 0, 100)];
        let labeled: Vec<(Sample, &str)> = (0..5).map(|t| (Sample::new(t, 7.0), "a")).collect();
        let s = activity_stats(&key(), &labeled, &acts);
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].n, s[0].mean, s[0].stddev), (5, 7.0, 0.0));
    }

    #[test]
    fn population_stddev() {
        let acts = [ActivityInterval::new("a", 0, 100)];
        let labeled = [(Sample::new(0, 0.0), "a"), (Sample::new(1, 10.0), "a")];
        let s = activity_stats(&key(), &labeled, &acts);
        assert_eq!((s[0].mean, s[0].stddev, s[0].min, s[0].max), (5.0, 5.0, 0.0, 10.0));
    }

    #[test]
    fn empty_activity_omitted_unassigned_last() {
        let acts = [ActivityInterval::new("b", 50, 60), ActivityInterval::new("a", 0, 10)];
        let labeled = [(Sample::new(100, 1.0), UNASSIGNED), (Sample::new(5, 2.0), "a")];
        let names: Vec<String> = activity_stats(&key(), &labeled, &acts).into_iter().map(|s| s.activity_name).collect();
        assert_eq!(names, vec!["a".to_string(), UNASSIGNED.to_string()]);
    }

    #[test]
    fn repeated_names_pool_samples() {
        let acts = [
            ActivityInterval::new("video", 0, 10),
            ActivityInterval::new("quiz", 10, 20),
            ActivityInterval::new("video", 20, 30),
        ];
        let samples: Vec<Sample> = (0..30).map(|t| Sample::new(t, t as f64)).collect();
        let labeled = segment_by_activity(&samples, &acts).unwrap();
        let s = activity_stats(&key(), &labeled, &acts);
        assert_eq!(s[0].activity_name, "video");
        assert_eq!(s[0].n, 20);
    }

    #[test]
    fn ranking_by_mean() {
        let acts = [ActivityInterval::new("video", 0, 10), ActivityInterval::new("quiz", 10, 20)];
        let r = rank_activities(&[stat("video", 50.0), stat("quiz", 70.0)], Modality::Attention, "eeg", &acts).unwrap();
        assert_eq!(r, vec![("quiz".to_string(), 70.0), ("video".to_string(), 50.0)]);
    }

    #[test]
    fn ranking_ties_by_start() {
        let acts = [ActivityInterval::new("late", 10, 20), ActivityInterval::new("early", 0, 10)];
        let r = rank_activities(&[stat("late", 5.0), stat("early", 5.0)], Modality::Attention, "eeg", &acts).unwrap();
        assert_eq!(r[0].0, "early");
    }

    #[test]
    fn ranking_unknown_stream() {
        assert!(matches!(
            rank_activities(&[stat("a", 1.0)], Modality::HeartRate, "eeg", &[]),
            Err(AnalyticsError::NoSuchModality { .. })
        ));
    }

    #[test]
    fn ranking_matches_brute_force_sort() {
        let acts: Vec<ActivityInterval> = ["intro", "video", "reading", "quiz"]
            .iter()
            .enumerate()
            .map(|(i, n)| ActivityInterval::new(*n, i as i64 * 10, i as i64 * 10 + 10))
            .collect();
        let means = [40.0, 62.5, 40.0, 71.0];
        let stats: Vec<ActivityStats> = acts.iter().zip(means).map(|(a, m)| stat(&a.name, m)).collect();
        let got = rank_activities(&stats, Modality::Attention, "eeg", &acts).unwrap();

        // brute force: repeatedly extract the max-mean entry, earliest start first on ties
        let mut pool: Vec<(usize, f64)> = means.iter().copied().enumerate().collect();
        let mut want = Vec::new();
        while !pool.is_empty() {
            let mut best = 0;
            for i in 1..pool.len() {
                if pool[i].1 > pool[best].1 {
                    best = i;
                }
            }
            let (idx, m) = pool.remove(best);
            want.push((acts[idx].name.clone(), m));
        }
        assert_eq!(got, want);
    }
}
