use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, SignalStream};
use crate::ingest::Modality;

/// Accepted value range for one modality. The upper bound is inclusive;
/// `max = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidRange {
    pub min: f64,
    #[serde(default)]
    pub min_exclusive: bool,
    #[serde(default)]
    pub max: Option<f64>,
}

impl ValidRange {
    pub fn closed(min: f64, max: f64) -> Self {
        Self { min, min_exclusive: false, max: Some(max) }
    }

    pub fn at_least(min: f64) -> Self {
        Self { min, min_exclusive: false, max: None }
    }

    pub fn contains(&self, v: f64) -> bool {
        let lower = if self.min_exclusive { v > self.min } else { v >= self.min };
        lower && self.max.is_none_or(|hi| v <= hi)
    }

    /// Physiological plausibility defaults.
    pub fn default_for(modality: Modality) -> Self {
        match modality {
            Modality::Attention | Modality::Meditation => Self::closed(0.0, 100.0),
            Modality::WaveDelta
            | Modality::WaveTheta
            | Modality::WaveAlpha
            | Modality::WaveBeta
            | Modality::WaveGamma => Self::at_least(0.0),
            Modality::HeartRate => Self::closed(25.0, 250.0),
            Modality::PupilDiameter => Self { min: 0.0, min_exclusive: true, max: Some(12.0) },
        }
    }
}

/// Per-modality ranges, defaulting to [`ValidRange::default_for`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidRanges(pub BTreeMap<Modality, ValidRange>);

impl ValidRanges {
    pub fn get(&self, modality: Modality) -> ValidRange {
        self.0.get(&modality).copied().unwrap_or_else(|| ValidRange::default_for(modality))
    }

    pub fn set(&mut self, modality: Modality, range: ValidRange) {
        self.0.insert(modality, range);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input: usize,
    pub kept: usize,
    pub non_finite: usize,
    pub out_of_range: usize,
    pub duplicate_timestamp: usize,
    /// Whether the input was out of timestamp order.
    pub reordered: bool,
}

/// Sort by timestamp (stable), then drop non-finite values, out-of-range
/// values and repeated timestamps. Invalid values are removed before
/// de-duplication, so a valid reading at a timestamp survives even when an
/// invalid one precedes it.
pub fn clean_signal(stream: SignalStream, range: ValidRange) -> Result<(SignalStream, CleaningReport), AnalyticsError> {
    if stream.cleaned {
        return Err(AnalyticsError::AlreadyCleaned(stream.key()));
    }
    let SignalStream { modality, source_id, mut samples, .. } = stream;
    let mut report = CleaningReport { input: samples.len(), ..Default::default() };

    report.reordered = samples.windows(2).any(|w| w[1].t_ms < w[0].t_ms);
    if report.reordered {
        samples.sort_by_key(|s| s.t_ms);
    }

    let mut kept = Vec::with_capacity(samples.len());
    for s in samples {
        if !s.value.is_finite() {
            report.non_finite += 1;
        } else if !range.contains(s.value) {
            report.out_of_range += 1;
        } else if kept.last().is_some_and(|prev: &crate::timeline::Sample| prev.t_ms == s.t_ms) {
            report.duplicate_timestamp += 1;
        } else {
            kept.push(s);
        }
    }
    report.kept = kept.len();

    let out = SignalStream { modality, source_id, samples: kept, cleaned: true };
    if out.samples.is_empty() {
        return Err(AnalyticsError::AllSamplesDropped(out.key()));
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeline::Sample;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn stream(samples: &[(i64, f64)]) -> SignalStream {
        SignalStream::new(Modality::Attention, "eeg", samples.iter().map(|&(t, v)| Sample::new(t, v)).collect())
    }

    const ATT: ValidRange = ValidRange { min: 0.0, min_exclusive: false, max: Some(100.0) };

    #[test]
    fn clean_input_unchanged() {
        let s = stream(&[(0, 1.0), (10, 2.0), (20, 3.0)]);
        let (out, rep) = clean_signal(s.clone(), ATT).unwrap();
        assert_eq!(out.samples, s.samples);
        assert!(out.cleaned);
        assert_eq!(rep, CleaningReport { input: 3, kept: 3, ..Default::default() });
    }

    #[test]
    fn out_of_range_dropped() {
        let (out, rep) = clean_signal(stream(&[(0, 50.0), (10, 250.0), (20, 60.0)]), ATT).unwrap();
        assert_eq!(out.samples.len(), 2);
        assert_eq!(rep.out_of_range, 1);
        assert_eq!(rep.non_finite + rep.duplicate_timestamp, 0);
    }

    #[test]
    fn nonfinite_and_duplicates() {
        let (out, rep) =
            clean_signal(stream(&[(10, 5.0), (0, f64::NAN), (0, 7.0), (10, 6.0), (5, f64::INFINITY)]), ATT).unwrap();
        assert_eq!(out.samples, vec![Sample::new(0, 7.0), Sample::new(10, 5.0)]);
        assert_eq!(
            rep,
            CleaningReport {
                input: 5,
                kept: 2,
                non_finite: 2,
                out_of_range: 0,
                duplicate_timestamp: 1,
                reordered: true
            }
        );
    }

    #[test]
    fn all_dropped_is_error() {
        assert!(matches!(
            clean_signal(stream(&[(0, -1.0), (1, 101.0)]), ATT),
            Err(AnalyticsError::AllSamplesDropped(_))
        ));
    }

    #[test]
    fn cleaning_twice_is_error() {
        let (out, _) = clean_signal(stream(&[(0, 1.0)]), ATT).unwrap();
        assert!(matches!(clean_signal(out, ATT), Err(AnalyticsError::AlreadyCleaned(_))));
    }

    #[test]
    fn default_ranges() {
        let pupil = ValidRange::default_for(Modality::PupilDiameter);
        assert!(!pupil.contains(0.0));
        assert!(pupil.contains(12.0));
        assert!(!pupil.contains(12.01));
        assert!(ValidRange::default_for(Modality::WaveGamma).contains(1e9));
        assert!(!ValidRange::default_for(Modality::HeartRate).contains(24.9));
        let mut ranges = ValidRanges::default();
        ranges.set(Modality::HeartRate, ValidRange::closed(30.0, 200.0));
        assert!(!ranges.get(Modality::HeartRate).contains(220.0));
        assert!(ranges.get(Modality::Attention).contains(100.0));
    }

    #[test]
    fn shuffled_stream_cleans_back_to_original() {
        let original: Vec<(i64, f64)> = (0..500).map(|i| (i * 37, (i % 101) as f64)).collect();
        let mut shuffled = original.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(7));
        let (out, rep) = clean_signal(stream(&shuffled), ATT).unwrap();
        assert_eq!(out.samples, stream(&original).samples);
        assert!(rep.reordered);
        assert_eq!(rep.kept, 500);
    }

    proptest! {
        #[test]
        fn cleaned_invariants(raw in proptest::collection::vec((0i64..200, -50f64..150.0), 1..200)) {
            let input = raw.len();
            match clean_signal(stream(&raw), ATT) {
                Ok((out, rep)) => {
                    prop_assert!(out.samples.windows(2).all(|w| w[0].t_ms < w[1].t_ms));
                    prop_assert!(out.samples.iter().all(|s| ATT.contains(s.value)));
                    prop_assert_eq!(rep.kept + rep.non_finite + rep.out_of_range + rep.duplicate_timestamp, input);
                }
                Err(AnalyticsError::AllSamplesDropped(_)) => {
                    prop_assert!(raw.iter().all(|&(_, v)| !ATT.contains(v)));
                }
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
