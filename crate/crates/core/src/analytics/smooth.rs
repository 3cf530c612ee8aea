use crate::exec::Exec;
use crate::timeline::Sample;

use super::SignalStream;

/// Trailing time-based window mean: each output at `t` is the mean of every
/// input with timestamp in `[t - window_ms, t]`. Windows at the start of the
/// stream are truncated, never empty. `window_ms = 0` is the identity on a
/// cleaned stream.
pub fn smooth_sliding_window(stream: &SignalStream, window_ms: u64) -> Vec<Sample> {
    debug_assert!(stream.cleaned, "smoothing expects a cleaned stream");
    smooth_sliding_window_with(&stream.samples, window_ms, Exec::default())
}

/// Same as [`smooth_sliding_window`] over strictly increasing `samples`.
///
/// Each window is summed directly in timestamp order rather than through a
/// running sum, so results do not drift over long sessions.
pub fn smooth_sliding_window_with(samples: &[Sample], window_ms: u64, exec: Exec) -> Vec<Sample> {
    let window = i64::try_from(window_ms).unwrap_or(i64::MAX);
    exec.map_range(samples.len(), |i| {
        let t = samples[i].t_ms;
        let from = t.saturating_sub(window);
        let lo = samples[..=i].partition_point(|s| s.t_ms < from);
        let members = &samples[lo..=i];
        let sum: f64 = members.iter().map(|s| s.value).sum();
        Sample::new(t, sum / members.len() as f64)
    })
}
