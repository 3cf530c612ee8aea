//! Reference oracles for the analytics engine.
//!
//! Everything here is written against plain tuples and slices, with the most
//! direct (usually quadratic) algorithm, and shares no code with
//! `mmla-core`. Tests compare the engine against these.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mean of every value whose timestamp lies in `[t - window, t]`, for each
/// point, summing members in index order.
pub fn window_means(points: &[(i64, f64)], window_ms: i64) -> Vec<f64> {
    points
        .iter()
        .map(|&(t, _)| {
            let mut sum = 0.0;
            let mut n = 0usize;
            for &(u, v) in points {
                if u >= t - window_ms && u <= t {
                    sum += v;
                    n += 1;
                }
            }
            sum / n as f64
        })
        .collect()
}

/// Piecewise-linear value at `t`, or `None` outside the sample span.
pub fn interpolate(points: &[(i64, f64)], t: i64) -> Option<f64> {
    for w in points.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        if t == t0 {
            return Some(v0);
        }
        if t == t1 {
            return Some(v1);
        }
        if t0 < t && t < t1 {
            let f = (t - t0) as f64 / (t1 - t0) as f64;
            return Some(v0 + (v1 - v0) * f);
        }
    }
    None
}

/// Both series interpolated on `start, start + step, ...` across the overlap
/// of their spans.
pub fn common_grid(a: &[(i64, f64)], b: &[(i64, f64)], step_ms: i64) -> (Vec<f64>, Vec<f64>) {
    let start = a[0].0.max(b[0].0);
    let end = a[a.len() - 1].0.min(b[b.len() - 1].0);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut t = start;
    while t <= end {
        xs.push(interpolate(a, t).unwrap());
        ys.push(interpolate(b, t).unwrap());
        t += step_ms;
    }
    (xs, ys)
}

/// Textbook sum-of-products Pearson correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let vx = n * sxx - sx * sx;
    let vy = n * syy - sy * sy;
    if vx <= 0.0 || vy <= 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / (vx * vy).sqrt())
}

/// Label of the interval containing `t` by linear scan, or `"unassigned"`.
pub fn label(t: i64, intervals: &[(String, i64, i64)]) -> &str {
    for (name, s, e) in intervals {
        if *s <= t && t < *e {
            return name;
        }
    }
    "unassigned"
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Peak,
    Trough,
}

/// Extrema by exhaustive valley search: plateaus collapse to their first
/// point; a peak's bases are the minima reached walking each way until a
/// strictly higher value; troughs mirror this with maxima.
pub fn extrema(series: &[(i64, f64)], frac: f64) -> Vec<(Kind, i64, f64)> {
    let mut runs: Vec<(i64, f64)> = Vec::new();
    for &p in series {
        if runs.last().is_none_or(|r| r.1 != p.1) {
            runs.push(p);
        }
    }
    let lo = runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let hi = runs.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo == 0.0 {
        return Vec::new();
    }
    let threshold = frac * (hi - lo);
    let mut out = Vec::new();
    for i in 1..runs.len().saturating_sub(1) {
        let v = runs[i].1;
        if v > runs[i - 1].1 && v > runs[i + 1].1 {
            let mut left = f64::INFINITY;
            for j in (0..i).rev() {
                if runs[j].1 > v {
                    break;
                }
                left = left.min(runs[j].1);
            }
            let mut right = f64::INFINITY;
            for r in &runs[i + 1..] {
                if r.1 > v {
                    break;
                }
                right = right.min(r.1);
            }
            let prominence = v - left.max(right);
            if prominence >= threshold {
                out.push((Kind::Peak, runs[i].0, prominence));
            }
        }
        if v < runs[i - 1].1 && v < runs[i + 1].1 {
            let mut left = f64::NEG_INFINITY;
            for j in (0..i).rev() {
                if runs[j].1 < v {
                    break;
                }
                left = left.max(runs[j].1);
            }
            let mut right = f64::NEG_INFINITY;
            for r in &runs[i + 1..] {
                if r.1 < v {
                    break;
                }
                right = right.max(r.1);
            }
            let prominence = left.min(right) - v;
            if prominence >= threshold {
                out.push((Kind::Trough, runs[i].0, prominence));
            }
        }
    }
    out
}

/// Closed-form line through two points: `(scale, offset)`.
pub fn two_point_fit((x1, y1): (i64, i64), (x2, y2): (i64, i64)) -> (f64, f64) {
    let a = (y2 - y1) as f64 / (x2 - x1) as f64;
    (a, y1 as f64 - a * x1 as f64)
}

/// Strictly increasing, irregularly spaced timestamps with values in
/// `[0, 100)`.
pub fn irregular_stream(rng: &mut impl Rng, n: usize, max_gap_ms: i64) -> Vec<(i64, f64)> {
    let mut t = rng.random_range(0..10_000);
    (0..n)
        .map(|_| {
            t += rng.random_range(1..=max_gap_ms);
            (t, rng.random_range(0.0..100.0))
        })
        .collect()
}

/// A random walk quantised to a coarse grid so plateaus and ties occur.
pub fn bumpy_series(rng: &mut impl Rng, n: usize) -> Vec<(i64, f64)> {
    let mut v = 0.0f64;
    (0..n)
        .map(|i| {
            v += rng.random_range(-3i32..=3) as f64 * 0.5;
            (i as i64 * 1000, v)
        })
        .collect()
}

/// Disjoint, possibly adjacent, intervals inside `[0, span)`.
pub fn random_intervals(rng: &mut impl Rng, max_count: usize, span: i64) -> Vec<(String, i64, i64)> {
    let count = rng.random_range(0..=max_count);
    let mut cuts: Vec<i64> = (0..2 * count).map(|_| rng.random_range(0..span)).collect();
    cuts.sort_unstable();
    cuts.dedup();
    cuts.chunks_exact(2).enumerate().map(|(i, c)| (format!("act{i}"), c[0], c[1])).collect()
}
