//! Deterministic synthetic session generator.
//!
//! Produces a complete input bundle (manifest, signal CSVs, activity JSONL,
//! test JSON, placeholder media) that exercises every ingest path: three
//! source clocks (marker fit with drift, explicit mapping, single marker),
//! out-of-order rows, duplicate timestamps, non-finite and out-of-range
//! values.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::ingest::{ClockSpec, MediaFileEntry, MediaKind, Modality, SessionManifest, SignalFileEntry, TestFiles};
use crate::timeline::ClockMapping;

/// Master-clock start of the demo session (2023-11-14T22:13:20Z).
pub const DEMO_START_MS: i64 = 1_700_000_000_000;
pub const DEMO_LEARNER_REF: &str = "UAM-learner-0042";
pub const DEMO_DURATION_MS: i64 = 600_000;

/// `(name, start, end)` offsets from [`DEMO_START_MS`]; the last 10 s are
/// deliberately left unassigned.
pub const DEMO_ACTIVITIES: [(&str, i64, i64); 5] = [
    ("intro", 0, 60_000),
    ("video", 60_000, 240_000),
    ("reading", 240_000, 360_000),
    ("quiz", 360_000, 480_000),
    ("survey", 480_000, 590_000),
];

const EEG_MODALITIES: [Modality; 7] = [
    Modality::Attention,
    Modality::Meditation,
    Modality::WaveDelta,
    Modality::WaveTheta,
    Modality::WaveAlpha,
    Modality::WaveBeta,
    Modality::WaveGamma,
];

#[derive(Debug, Clone)]
pub struct DemoOptions {
    pub seed: u64,
    pub learner_ref: String,
}

impl Default for DemoOptions {
    fn default() -> Self {
        Self { seed: 20_231_114, learner_ref: DEMO_LEARNER_REF.to_string() }
    }
}

/// Source clock of the EEG band: device-relative ms, started 1.2 s before the
/// session and running 50 ppm slow.
fn eeg_master(t_src: i64) -> i64 {
    DEMO_START_MS - 1_200 + t_src + t_src / 20_000
}

/// Inverse of [`eeg_master`] rounded to the device's ms grid.
fn eeg_source(t_master: i64) -> i64 {
    ((t_master - DEMO_START_MS + 1_200) as f64 / 1.00005).round() as i64
}

const WATCH_OFFSET_MS: i64 = -350;
const EYE_TRACKER_OFFSET_MS: i64 = DEMO_START_MS - 800;

fn activity_level(t_rel: i64, levels: [f64; 5]) -> f64 {
    DEMO_ACTIVITIES.iter().zip(levels).find(|((_, s, e), _)| (*s..*e).contains(&t_rel)).map_or(levels[4], |(_, l)| l)
}

fn csv(rows: &[(i64, String)]) -> String {
    let mut out = String::from("timestamp_ms,value\n");
    for (t, v) in rows {
        let _ = writeln!(out, "{t},{v}");
    }
    out
}

fn signal_rows(modality: Modality, rng: &mut ChaCha8Rng) -> Vec<(i64, f64)> {
    let (period_ms, to_source): (i64, fn(i64) -> i64) = match modality {
        Modality::HeartRate => (1_000, |t| t - WATCH_OFFSET_MS),
        Modality::PupilDiameter => (100, |t| t - EYE_TRACKER_OFFSET_MS),
        _ => (1_000, eeg_source),
    };
    (0..=DEMO_DURATION_MS / period_ms)
        .map(|k| {
            let rel = k * period_ms;
            let phase = rel as f64 / 45_000.0 * TAU;
            let noise: f64 = rng.random_range(-1.0..1.0);
            let v = match modality {
                Modality::Attention => {
                    activity_level(rel, [50.0, 62.0, 55.0, 78.0, 44.0]) + 8.0 * phase.sin() + 6.0 * noise
                }
                Modality::Meditation => {
                    activity_level(rel, [55.0, 48.0, 58.0, 35.0, 66.0]) + 7.0 * phase.cos() + 6.0 * noise
                }
                Modality::HeartRate => {
                    activity_level(rel, [72.0, 70.0, 74.0, 88.0, 76.0]) + 3.0 * phase.sin() + 2.0 * noise
                }
                Modality::PupilDiameter => {
                    activity_level(rel, [3.4, 3.8, 3.6, 4.4, 3.3]) + 0.2 * phase.sin() + 0.15 * noise
                }
                band => {
                    let scale = match band {
                        Modality::WaveDelta => 400_000.0,
                        Modality::WaveTheta => 120_000.0,
                        Modality::WaveAlpha => 45_000.0,
                        Modality::WaveBeta => 25_000.0,
                        _ => 9_000.0,
                    };
                    scale * (1.0 + 0.3 * phase.sin() + 0.25 * noise)
                }
            };
            let v = match modality {
                Modality::Attention | Modality::Meditation => v.clamp(1.0, 100.0),
                _ => v,
            };
            (to_source(DEMO_START_MS + rel), v)
        })
        .collect()
}

/// Format rows and inject the defects cleaning is expected to remove.
fn render_signal(modality: Modality, rows: Vec<(i64, f64)>) -> String {
    let decimals = if modality == Modality::PupilDiameter { 3 } else { 2 };
    let mut rendered: Vec<(i64, String)> = rows.iter().map(|(t, v)| (*t, format!("{v:.decimals$}"))).collect();
    match modality {
        Modality::Attention => {
            // out of range, non-finite, a repeated timestamp and a swapped pair
            rendered[100].1 = "250".into();
            rendered[200].1 = "NaN".into();
            let dup = rendered[300].clone();
            rendered.insert(301, (dup.0, "99.00".into()));
            rendered.swap(400, 401);
        }
        Modality::HeartRate => {
            rendered[50].1 = "0".into();
            rendered[51].1 = "inf".into();
        }
        Modality::PupilDiameter => {
            rendered[1234].1 = "-1.000".into();
        }
        _ => {}
    }
    csv(&rendered)
}

fn placeholder_media(kind: MediaKind, len: usize) -> Vec<u8> {
    let mut bytes = format!("PLACEHOLDER-{}\n", kind.as_str()).into_bytes();
    bytes.extend((0..len).map(|i| (i % 251) as u8));
    bytes
}

/// The demo manifest as written by [`write_demo_session`].
pub fn demo_manifest(options: &DemoOptions) -> SessionManifest {
    let eeg_clock = ClockSpec::Markers([0i64, 300_000, 600_000].iter().map(|&s| (s, eeg_master(s))).collect());
    let mut signal_files: Vec<SignalFileEntry> = EEG_MODALITIES
        .iter()
        .enumerate()
        .map(|(i, &m)| SignalFileEntry {
            path: format!("signals/{m}_eeg_band.csv"),
            modality: m,
            source_id: "eeg_band".into(),
            // the clock is declared once per source; other entries inherit it
            clock: (i == 0).then(|| eeg_clock.clone()),
        })
        .collect();
    signal_files.push(SignalFileEntry {
        path: "signals/heart_rate_watch_L.csv".into(),
        modality: Modality::HeartRate,
        source_id: "watch_L".into(),
        clock: Some(ClockSpec::Mapping(ClockMapping { scale: 1.0, offset_ms: WATCH_OFFSET_MS as f64 })),
    });
    signal_files.push(SignalFileEntry {
        path: "signals/pupil_diameter_eye_tracker.csv".into(),
        modality: Modality::PupilDiameter,
        source_id: "eye_tracker".into(),
        clock: Some(ClockSpec::Markers(vec![(10_000, 10_000 + EYE_TRACKER_OFFSET_MS)])),
    });

    let media = |path: &str, kind, source_start_ms, duration_ms, source_id: &str| MediaFileEntry {
        path: path.into(),
        kind,
        source_start_ms,
        duration_ms,
        source_id: source_id.into(),
    };
    SessionManifest {
        learner_ref: options.learner_ref.clone(),
        session_start_ms: DEMO_START_MS,
        signal_files,
        activity_file: "activities.jsonl".into(),
        media_files: vec![
            media("media/screen.mp4", MediaKind::Screen, DEMO_START_MS, DEMO_DURATION_MS, "pc"),
            media("media/webcam_front.mp4", MediaKind::WebcamFront, DEMO_START_MS + 2_000, 596_000, "pc"),
            media("media/webcam_side.mp4", MediaKind::WebcamSide, DEMO_START_MS + 2_500, 595_000, "pc"),
            media("media/fixations.mp4", MediaKind::FixationOverlay, 800, 598_000, "eye_tracker"),
        ],
        test_files: Some(TestFiles { pretest: "tests/pretest.json".into(), posttest: "tests/posttest.json".into() }),
        demographics: BTreeMap::from([
            ("age".to_string(), "23".to_string()),
            ("program".to_string(), "computer science".to_string()),
            ("medical_notes".to_string(), "none reported".to_string()),
        ]),
    }
}

/// Every file of the demo bundle as `(relative path, bytes)`, in write order.
pub fn demo_files(options: &DemoOptions) -> Vec<(String, Vec<u8>)> {
    let manifest = demo_manifest(options);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut files = Vec::new();

    let mut manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest_text.push('\n');
    files.push(("manifest.json".to_string(), manifest_text.into_bytes()));

    for entry in &manifest.signal_files {
        let rows = signal_rows(entry.modality, &mut rng);
        files.push((entry.path.clone(), render_signal(entry.modality, rows).into_bytes()));
    }

    let mut log = String::new();
    for (name, s, e) in DEMO_ACTIVITIES {
        let line = json!({"name": name, "start_ms": DEMO_START_MS + s, "end_ms": DEMO_START_MS + e});
        let _ = writeln!(log, "{line}");
    }
    files.push((manifest.activity_file.clone(), log.into_bytes()));

    files.push((
        "tests/pretest.json".into(),
        b"{\"score\": 40, \"max_score\": 100, \"per_item\": [10, 10, 20]}\n".to_vec(),
    ));
    files.push((
        "tests/posttest.json".into(),
        b"{\"score\": 70, \"max_score\": 100, \"per_item\": [20, 25, 25]}\n".to_vec(),
    ));

    for m in &manifest.media_files {
        files.push((m.path.clone(), placeholder_media(m.kind, 4096)));
    }
    files
}

/// Write the demo bundle under `dir`; returns the manifest path.
pub fn write_demo_session(dir: &Path, options: &DemoOptions) -> io::Result<std::path::PathBuf> {
    for (rel, bytes) in demo_files(options) {
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, bytes)?;
    }
    Ok(dir.join("manifest.json"))
}
