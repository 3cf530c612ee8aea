use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mmla_core::analytics::{correlate_streams, smooth_sliding_window_with, SignalStream};
use mmla_core::ingest::Modality;
use mmla_core::timeline::Sample;
use mmla_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stream(rng: &mut ChaCha8Rng, n: usize, step_ms: i64) -> SignalStream {
    let samples = (0..n)
        .map(|i| Sample::new(i as i64 * step_ms + rng.random_range(0..step_ms / 2), rng.random_range(0.0..100.0)))
        .collect();
    let mut s = SignalStream::new(Modality::Attention, format!("src{}", rng.random::<u16>()), samples);
    s.cleaned = true;
    s
}

fn smoothing(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("smooth_30s");
    for n in [1_000usize, 10_000, 60_000] {
        // 10 Hz, like a pupil stream
        let s = stream(&mut rng, n, 100);
        for exec in [Exec::Sequential, Exec::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &s, |b, s| {
                b.iter(|| smooth_sliding_window_with(&s.samples, 30_000, exec))
            });
        }
    }
    group.finish();
}

fn correlation(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut group = c.benchmark_group("correlate_1s");
    for k in [4usize, 9, 16] {
        let streams: Vec<SignalStream> = (0..k).map(|_| stream(&mut rng, 3_600, 1_000)).collect();
        for exec in [Exec::Sequential, Exec::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), k), &streams, |b, s| {
                b.iter(|| correlate_streams(s, 1_000, None, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, smoothing, correlation);
criterion_main!(benches);
