use std::collections::HashSet;
use std::fmt::Write;

use mmla_core::fixture::{demo_files, demo_manifest, DemoOptions};
use mmla_core::ingest::{
    parse_activity_log, parse_manifest, parse_signal_file, parse_test_file, IngestError, MediaKind, Modality, TestKind,
};
use proptest::prelude::*;

fn signal_text(rows: &[(i64, f64)]) -> String {
    let mut s = String::from("timestamp_ms,value\n");
    for (t, v) in rows {
        writeln!(s, "{t},{v}").unwrap();
    }
    s
}

#[test]
fn ten_thousand_rows() {
    let rows: Vec<(i64, f64)> = (0..10_000).map(|i| (1_000 + i * 7, (i % 97) as f64 * 0.25)).collect();
    let parsed = parse_signal_file(signal_text(&rows).as_bytes(), Modality::WaveAlpha).unwrap();
    assert_eq!(parsed, rows);
}

#[test]
fn full_manifest_counts() {
    // counted from the JSON text, not from the parsed structure
    let text = String::from_utf8(demo_files(&DemoOptions::default()).remove(0).1).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let modalities: HashSet<&str> =
        json["signal_files"].as_array().unwrap().iter().map(|f| f["modality"].as_str().unwrap()).collect();
    let kinds: HashSet<&str> =
        json["media_files"].as_array().unwrap().iter().map(|f| f["kind"].as_str().unwrap()).collect();

    let m = parse_manifest(text.as_bytes()).unwrap();
    assert_eq!(modalities.len(), 9);
    assert_eq!(kinds.len(), 4);
    assert_eq!(m.signal_files.len(), 9);
    assert_eq!(m.signal_files.iter().map(|f| f.modality).collect::<HashSet<_>>(), Modality::ALL.into_iter().collect());
    assert_eq!(m.media_files.len(), 4);
    assert_eq!(
        m.media_files.iter().map(|f| f.kind).collect::<HashSet<_>>(),
        [MediaKind::Screen, MediaKind::WebcamFront, MediaKind::WebcamSide, MediaKind::FixationOverlay].into()
    );
    assert!(m.test_files.is_some());
    assert_eq!(m, demo_manifest(&DemoOptions::default()));
}

#[test]
fn every_structural_deletion_is_malformed() {
    let text = String::from_utf8(demo_files(&DemoOptions::default()).remove(0).1).unwrap();
    let mut checked = 0;
    for (i, c) in text.char_indices() {
        if !"{}[]:,\"".contains(c) {
            continue;
        }
        let mut broken = text.clone();
        broken.remove(i);
        match parse_manifest(broken.as_bytes()) {
            Err(IngestError::MalformedManifest(_)) => {}
            other => panic!("deleting {c:?} at byte {i} gave {other:?}"),
        }
        checked += 1;
    }
    assert!(checked > 100);
}

#[test]
fn demo_bundle_parses() {
    for (path, bytes) in demo_files(&DemoOptions::default()) {
        if path.starts_with("signals/") {
            assert!(parse_signal_file(&bytes, Modality::Attention).unwrap().len() >= 599, "{path}");
        } else if path.ends_with(".jsonl") {
            assert_eq!(parse_activity_log(&bytes).unwrap().len(), 5);
        } else if path == "tests/pretest.json" {
            assert_eq!(parse_test_file(&bytes, TestKind::Pretest).unwrap().score, 40.0);
        }
    }
}

fn rows_strategy() -> impl Strategy<Value = Vec<(i64, f64)>> {
    prop::collection::vec((0i64..10_000_000, -1e6f64..1e6), 1..50)
}

proptest! {
    #[test]
    fn signal_roundtrip(rows in rows_strategy()) {
        let parsed = parse_signal_file(signal_text(&rows).as_bytes(), Modality::Attention).unwrap();
        prop_assert_eq!(parsed, rows);
    }

    /// An extra comma is reported at its row; a newline splitting a row may
    /// leave a valid first half, so the next row can be the one reported.
    #[test]
    fn extra_delimiter_is_malformed_row(rows in rows_strategy(), pick in any::<prop::sample::Index>(), at in any::<prop::sample::Index>(), delim in prop::sample::select(vec![',', '\n'])) {
        let row = pick.index(rows.len());
        let mut lines: Vec<String> = signal_text(&rows).lines().map(str::to_string).collect();
        let line = &mut lines[row + 1];
        let pos = at.index(line.len());
        line.insert(pos, delim);
        let text = lines.join("\n") + "\n";
        match parse_signal_file(text.as_bytes(), Modality::Attention) {
            Err(IngestError::MalformedRow { row: r, .. }) if delim == ',' => prop_assert_eq!(r, row + 2),
            Err(IngestError::MalformedRow { row: r, .. }) => prop_assert!(r == row + 2 || r == row + 3),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    /// Arbitrary byte damage never panics in any parser.
    #[test]
    fn damaged_bytes_never_panic(rows in rows_strategy(), edits in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..5)) {
        let mut bytes = signal_text(&rows).into_bytes();
        for (at, b) in &edits {
            let i = at.index(bytes.len());
            bytes[i] = *b;
        }
        let _ = parse_signal_file(&bytes, Modality::HeartRate);
        let _ = parse_activity_log(&bytes);
        let _ = parse_manifest(&bytes);
        let _ = parse_test_file(&bytes, TestKind::Posttest);
    }

    #[test]
    fn header_damage_is_malformed(rows in rows_strategy(), at in 0usize..18, b in prop::sample::select(b",;\n\r\"{ ".to_vec())) {
        let mut bytes = signal_text(&rows).into_bytes();
        prop_assume!(bytes[at] != b);
        bytes[at] = b;
        let r = parse_signal_file(&bytes, Modality::HeartRate);
        prop_assert!(matches!(r, Err(IngestError::MalformedRow { row: 1, .. })), "{:?}", r);
    }

    #[test]
    fn activity_lines_with_a_structural_char_removed_fail(
        name in "[a-z]{1,12}", start in 0i64..1_000_000, len in 1i64..1_000_000, at in any::<prop::sample::Index>(),
    ) {
        let line = format!("{{\"name\":\"{name}\",\"start_ms\":{start},\"end_ms\":{}}}", start + len);
        let structural: Vec<usize> = line.char_indices().filter(|(_, c)| "{}:,\"".contains(*c)).map(|(i, _)| i).collect();
        let mut broken = line.clone();
        broken.remove(structural[at.index(structural.len())]);
        let r = parse_activity_log(broken.as_bytes());
        prop_assert!(matches!(r, Err(IngestError::MalformedRow { row: 1, .. })), "{} -> {:?}", broken, r);
    }
}
