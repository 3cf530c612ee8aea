//! The analytics engine against the brute-force reference implementations.

use mmla_core::analytics::{
    correlate_streams, detect_extrema, pair_grid, segment_by_activity, smooth_sliding_window_with, ActivityInterval,
    ExtremumKind, SignalStream,
};
use mmla_core::ingest::Modality;
use mmla_core::timeline::{estimate_clock_mapping, resample_linear, Sample};
use mmla_core::Exec;
use mmla_testkit as oracle;
use proptest::prelude::*;

fn samples(points: &[(i64, f64)]) -> Vec<Sample> {
    points.iter().copied().map(Sample::from).collect()
}

fn stream(source: &str, points: &[(i64, f64)]) -> SignalStream {
    let mut s = SignalStream::new(Modality::Attention, source, samples(points));
    s.cleaned = true;
    s
}

fn intervals(raw: &[(String, i64, i64)]) -> Vec<ActivityInterval> {
    raw.iter().map(|(n, s, e)| ActivityInterval::new(n.clone(), *s, *e)).collect()
}

fn points(seed: u64, n: usize, max_gap: i64) -> Vec<(i64, f64)> {
    oracle::irregular_stream(&mut oracle::rng(seed), n, max_gap)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoothing_matches_window_means(seed in any::<u64>(), n in 1usize..300, window in 0u64..60_000) {
        let pts = points(seed, n, 5_000);
        let want = oracle::window_means(&pts, window as i64);
        for exec in [Exec::Sequential, Exec::Parallel] {
            let got = smooth_sliding_window_with(&samples(&pts), window, exec);
            prop_assert_eq!(got.len(), pts.len());
            for ((g, w), p) in got.iter().zip(&want).zip(&pts) {
                prop_assert_eq!(g.t_ms, p.0);
                prop_assert!((g.value - w).abs() <= 1e-12 * w.abs().max(1.0));
            }
        }
    }

    #[test]
    fn resampling_matches_interpolation(seed in any::<u64>(), n in 2usize..200, step in 1i64..3_000) {
        let pts = points(seed, n, 2_000);
        let grid = mmla_core::timeline::TimeGrid::covering(pts[0].0, pts[n - 1].0, step).unwrap();
        let got = resample_linear(&samples(&pts), &grid).unwrap();
        prop_assert_eq!(got.len(), grid.count);
        for s in got {
            let want = oracle::interpolate(&pts, s.t_ms).unwrap();
            prop_assert!((s.value - want).abs() <= 1e-9);
        }
    }

    #[test]
    fn correlation_matches_direct_pearson(seed in any::<u64>(), n in 2usize..200, m in 2usize..200, step in 200i64..2_000) {
        let a = points(seed, n, 1_500);
        let b = points(seed ^ 0x9e37_79b9, m, 1_500);
        let streams = [stream("a", &a), stream("b", &b)];
        let matrix = correlate_streams(&streams, step, None, Exec::default()).unwrap();
        let overlap = a[0].0.max(b[0].0) <= a[n - 1].0.min(b[m - 1].0);
        let want = if overlap { oracle::pearson(&oracle::common_grid(&a, &b, step).0, &oracle::common_grid(&a, &b, step).1) } else { None };
        match (matrix.get(0, 1), want) {
            (Some(r), Some(w)) => prop_assert!((r - w).abs() <= 1e-9, "{} vs {}", r, w),
            (None, None) => {}
            (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
        }
        prop_assert_eq!(matrix.get(0, 1), matrix.get(1, 0));
        prop_assert_eq!(matrix.get(0, 0), Some(1.0));
    }

    #[test]
    fn segmentation_matches_linear_scan(seed in any::<u64>(), n in 0usize..400, max_intervals in 0usize..12) {
        let mut rng = oracle::rng(seed);
        let pts = oracle::irregular_stream(&mut rng, n, 3_000);
        let span = pts.last().map_or(10_000, |p| p.0 + 5_000);
        let raw = oracle::random_intervals(&mut rng, max_intervals, span);
        let acts = intervals(&raw);
        let labeled = segment_by_activity(&samples(&pts), &acts).unwrap();
        prop_assert_eq!(labeled.len(), pts.len());
        for ((s, label), p) in labeled.iter().zip(&pts) {
            prop_assert_eq!(s.t_ms, p.0);
            prop_assert_eq!(*label, oracle::label(p.0, &raw));
        }
    }

    #[test]
    fn extrema_match_exhaustive_search(seed in any::<u64>(), n in 1usize..300, frac in prop::sample::select(vec![0.01, 0.05, 0.1, 0.25, 0.5, 1.0])) {
        let series = oracle::bumpy_series(&mut oracle::rng(seed), n);
        let got: Vec<(oracle::Kind, i64, f64)> = detect_extrema(&samples(&series), &[], frac)
            .unwrap()
            .into_iter()
            .map(|e| {
                let kind = match e.kind { ExtremumKind::Peak => oracle::Kind::Peak, ExtremumKind::Trough => oracle::Kind::Trough };
                (kind, e.t_ms, e.prominence)
            })
            .collect();
        let mut want = oracle::extrema(&series, frac);
        want.sort_by_key(|e| e.1);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn two_point_clock_fit(x1 in -10_000_000i64..10_000_000, dx in 1i64..10_000_000, y1 in -10_000_000i64..10_000_000, dy in 1i64..10_000_000) {
        let m = estimate_clock_mapping(&[(x1, y1), (x1 + dx, y1 + dy)]).unwrap();
        let (a, b) = oracle::two_point_fit((x1, y1), (x1 + dx, y1 + dy));
        prop_assert!((m.scale - a).abs() <= 1e-9 * a.abs().max(1.0));
        prop_assert!((m.offset_ms - b).abs() <= 1e-9 * b.abs().max(1.0));
    }
}

#[test]
fn pair_grid_starts_at_overlap() {
    let a = stream("a", &[(1_500, 0.0), (9_000, 1.0)]);
    let b = stream("b", &[(0, 0.0), (7_200, 1.0)]);
    let g = pair_grid(&a, &b, 1_000, None).unwrap();
    assert_eq!((g.start_ms, g.count, g.last()), (1_500, 6, 6_500));
    let within = ActivityInterval::new("x", 2_000, 4_000);
    let g = pair_grid(&a, &b, 1_000, Some(&within)).unwrap();
    assert_eq!((g.start_ms, g.count), (2_000, 2));
}
