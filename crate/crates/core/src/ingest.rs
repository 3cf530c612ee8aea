//! Parsers for session input files.
//!
//! | file            | format                                         |
//! |-----------------|------------------------------------------------|
//! | manifest        | JSON object, unknown keys rejected             |
//! | signal log      | CSV, header `timestamp_ms,value`, no quoting   |
//! | activity log    | JSONL, keys `name`, `start_ms`, `end_ms`       |
//! | pre/post test   | JSON `{score, max_score, per_item?}`           |
//!
//! Parsers are policy-free: signal values are accepted as any real and
//! timestamps in any order. Range checks and ordering happen in
//! [`crate::analytics::clean_signal`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeline::ClockMapping;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("invalid manifest at `{field}`: {message}")]
    InvalidManifest { field: String, message: String },
    #[error("malformed row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("invalid record at row {row}: {message}")]
    InvalidRecord { row: usize, message: String },
    #[error("malformed test file: {0}")]
    MalformedTest(String),
    #[error("invalid test file: {0}")]
    InvalidTest(String),
}

impl IngestError {
    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        IngestError::InvalidManifest { field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Attention,
    Meditation,
    WaveDelta,
    WaveTheta,
    WaveAlpha,
    WaveBeta,
    WaveGamma,
    HeartRate,
    PupilDiameter,
}

impl Modality {
    pub const ALL: [Modality; 9] = [
        Modality::Attention,
        Modality::Meditation,
        Modality::WaveDelta,
        Modality::WaveTheta,
        Modality::WaveAlpha,
        Modality::WaveBeta,
        Modality::WaveGamma,
        Modality::HeartRate,
        Modality::PupilDiameter,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Attention => "attention",
            Modality::Meditation => "meditation",
            Modality::WaveDelta => "wave_delta",
            Modality::WaveTheta => "wave_theta",
            Modality::WaveAlpha => "wave_alpha",
            Modality::WaveBeta => "wave_beta",
            Modality::WaveGamma => "wave_gamma",
            Modality::HeartRate => "heart_rate",
            Modality::PupilDiameter => "pupil_diameter",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Modality::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| format!("unknown modality `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaKind {
    Screen,
    WebcamFront,
    WebcamSide,
    FixationOverlay,
}

impl MediaKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MediaKind::Screen => "screen",
            MediaKind::WebcamFront => "webcam_front",
            MediaKind::WebcamSide => "webcam_side",
            MediaKind::FixationOverlay => "fixation_overlay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Pretest,
    Posttest,
}

/// How a source clock is reconciled with the master timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ClockSpec {
    /// Explicit affine mapping.
    Mapping(ClockMapping),
    /// `(t_source_ms, t_master_ms)` pairs fitted by least squares.
    Markers(Vec<(i64, i64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalFileEntry {
    pub path: String,
    pub modality: Modality,
    pub source_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<ClockSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaFileEntry {
    pub path: String,
    pub kind: MediaKind,
    pub source_start_ms: i64,
    pub duration_ms: i64,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFiles {
    pub pretest: String,
    pub posttest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub learner_ref: String,
    pub session_start_ms: i64,
    pub signal_files: Vec<SignalFileEntry>,
    pub activity_file: String,
    #[serde(default)]
    pub media_files: Vec<MediaFileEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_files: Option<TestFiles>,
    #[serde(default)]
    pub demographics: BTreeMap<String, String>,
}

impl SessionManifest {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.learner_ref.is_empty() {
            return Err(IngestError::invalid("learner_ref", "must not be empty"));
        }
        if self.session_start_ms <= 0 {
            return Err(IngestError::invalid("session_start_ms", "must be > 0"));
        }
        if self.activity_file.is_empty() {
            return Err(IngestError::invalid("activity_file", "must not be empty"));
        }
        let mut seen = HashSet::new();
        for (i, f) in self.signal_files.iter().enumerate() {
            if f.path.is_empty() {
                return Err(IngestError::invalid(format!("signal_files[{i}].path"), "must not be empty"));
            }
            if f.source_id.is_empty() {
                return Err(IngestError::invalid(format!("signal_files[{i}].source_id"), "must not be empty"));
            }
            if !seen.insert((f.modality, f.source_id.as_str())) {
                return Err(IngestError::invalid(
                    format!("signal_files[{i}]"),
                    format!("duplicate (modality, source_id) = ({}, {})", f.modality, f.source_id),
                ));
            }
            match &f.clock {
                Some(ClockSpec::Mapping(m)) => m
                    .validate()
                    .map_err(|e| IngestError::invalid(format!("signal_files[{i}].clock.mapping"), e.to_string()))?,
                Some(ClockSpec::Markers(pairs)) if pairs.is_empty() => {
                    return Err(IngestError::invalid(format!("signal_files[{i}].clock.markers"), "must not be empty"));
                }
                _ => {}
            }
        }
        // a source has one clock; entries that declare it must agree
        let mut clocks: HashMap<&str, (usize, &ClockSpec)> = HashMap::new();
        for (i, f) in self.signal_files.iter().enumerate() {
            if let Some(spec) = &f.clock {
                if let Some((j, other)) = clocks.insert(f.source_id.as_str(), (i, spec)) {
                    if other != spec {
                        return Err(IngestError::invalid(
                            format!("signal_files[{i}].clock"),
                            format!("conflicts with clock of signal_files[{j}] for source `{}`", f.source_id),
                        ));
                    }
                }
            }
        }
        for (i, m) in self.media_files.iter().enumerate() {
            if m.path.is_empty() {
                return Err(IngestError::invalid(format!("media_files[{i}].path"), "must not be empty"));
            }
            if m.duration_ms <= 0 {
                return Err(IngestError::invalid(format!("media_files[{i}].duration_ms"), "must be > 0"));
            }
        }
        if let Some(t) = &self.test_files {
            if t.pretest.is_empty() || t.posttest.is_empty() {
                return Err(IngestError::invalid("test_files", "paths must not be empty"));
            }
        }
        Ok(())
    }

    /// The declared clock for `source_id`, if any signal entry carries one.
    pub fn clock_for(&self, source_id: &str) -> Option<&ClockSpec> {
        self.signal_files.iter().filter(|f| f.source_id == source_id).find_map(|f| f.clock.as_ref())
    }
}

enum JsonFailure {
    Syntax(String),
    Schema(String),
}

/// Syntax is checked over the whole text before any schema error can be
/// raised, so a document that is broken anywhere is always reported as
/// malformed.
fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, JsonFailure> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| JsonFailure::Syntax(e.to_string()))?;
    serde_json::from_value(value).map_err(|e| JsonFailure::Schema(e.to_string()))
}

pub fn parse_manifest(bytes: &[u8]) -> Result<SessionManifest, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IngestError::MalformedManifest(e.to_string()))?;
    let manifest: SessionManifest = parse_json(text).map_err(|e| match e {
        JsonFailure::Syntax(m) => IngestError::MalformedManifest(m),
        JsonFailure::Schema(m) => IngestError::invalid("$", m),
    })?;
    manifest.validate()?;
    Ok(manifest)
}

pub const SIGNAL_HEADER: &str = "timestamp_ms,value";

/// Lines of `text`, with CRLF normalised and a single trailing terminator
/// allowed. Yields 1-based row numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines: Vec<&str> = if body.is_empty() && text.is_empty() { Vec::new() } else { body.split('\n').collect() };
    for l in lines.iter_mut() {
        *l = l.strip_suffix('\r').unwrap_or(l);
    }
    lines.into_iter().enumerate().map(|(i, l)| (i + 1, l))
}

/// Parse a two-column signal CSV into `(t_source_ms, value)` pairs in file
/// order. `modality` is carried for callers' error context only.
pub fn parse_signal_file(bytes: &[u8], _modality: Modality) -> Result<Vec<(i64, f64)>, IngestError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| IngestError::MalformedRow { row: 1, message: format!("not UTF-8: {e}") })?;
    let mut lines = data_lines(text);
    match lines.next() {
        Some((_, SIGNAL_HEADER)) => {}
        Some((row, other)) => {
            return Err(IngestError::MalformedRow {
                row,
                message: format!("expected header `{SIGNAL_HEADER}`, got `{other}`"),
            })
        }
        None => return Err(IngestError::EmptyFile),
    }
    let mut out = Vec::new();
    for (row, line) in lines {
        let mut fields = line.split(',');
        let (Some(t), Some(v), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(IngestError::MalformedRow { row, message: format!("expected 2 fields in `{line}`") });
        };
        let t: i64 =
            t.parse().map_err(|_| IngestError::MalformedRow { row, message: format!("bad timestamp `{t}`") })?;
        let v = parse_real(v).ok_or_else(|| IngestError::MalformedRow { row, message: format!("bad value `{v}`") })?;
        out.push((t, v));
    }
    if out.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(out)
}

/// Rust float syntax minus the leading `+` and leading/trailing `.` forms,
/// which sensor exporters never emit. `NaN`/`inf` pass through for cleaning.
fn parse_real(s: &str) -> Option<f64> {
    if s.is_empty() || s.starts_with('+') || s.starts_with('.') || s.ends_with('.') {
        return None;
    }
    s.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawActivityRecord {
    pub name: String,
    pub start_ms: i64,
    pub end_ms: i64,
}

pub fn parse_activity_log(bytes: &[u8]) -> Result<Vec<RawActivityRecord>, IngestError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| IngestError::MalformedRow { row: 1, message: format!("not UTF-8: {e}") })?;
    let mut out = Vec::new();
    for (row, line) in data_lines(text) {
        let rec: RawActivityRecord = parse_json(line).map_err(|e| match e {
            JsonFailure::Syntax(message) => IngestError::MalformedRow { row, message },
            JsonFailure::Schema(message) => IngestError::InvalidRecord { row, message },
        })?;
        if rec.name.is_empty() {
            return Err(IngestError::InvalidRecord { row, message: "name must not be empty".into() });
        }
        if rec.start_ms >= rec.end_ms {
            return Err(IngestError::InvalidRecord {
                row,
                message: format!("start_ms {} must be < end_ms {}", rec.start_ms, rec.end_ms),
            });
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(out)
}

pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub score: f64,
    pub max_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_item: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TestFile {
    score: f64,
    max_score: f64,
    #[serde(default)]
    per_item: Option<Vec<f64>>,
}

impl TestResult {
    pub fn new(kind: TestKind, score: f64, max_score: f64, per_item: Option<Vec<f64>>) -> Result<Self, IngestError> {
        let r = Self { kind, score, max_score, per_item };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.max_score.is_finite() && self.max_score > 0.0) {
            return Err(IngestError::InvalidTest(format!("max_score must be > 0, got {}", self.max_score)));
        }
        if !(self.score.is_finite() && (0.0..=self.max_score).contains(&self.score)) {
            return Err(IngestError::InvalidTest(format!("score {} outside [0, {}]", self.score, self.max_score)));
        }
        if let Some(items) = &self.per_item {
            if items.iter().any(|x| !x.is_finite()) {
                return Err(IngestError::InvalidTest("per_item values must be finite".into()));
            }
            let sum: f64 = items.iter().sum();
            if (sum - self.score).abs() > SUM_TOLERANCE {
                return Err(IngestError::InvalidTest(format!(
                    "per_item sum {sum} does not match score {}",
                    self.score
                )));
            }
        }
        Ok(())
    }
}

pub fn parse_test_file(bytes: &[u8], kind: TestKind) -> Result<TestResult, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IngestError::MalformedTest(e.to_string()))?;
    let f: TestFile = parse_json(text).map_err(|e| match e {
        JsonFailure::Syntax(m) => IngestError::MalformedTest(m),
        JsonFailure::Schema(m) => IngestError::InvalidTest(m),
    })?;
    TestResult::new(kind, f.score, f.max_score, f.per_item)
}
