//! Anonymized session documents and their persistence.
//!
//! A [`SessionStore`] holds one document per session plus a registry of
//! salted learner digests kept apart from the documents. Writes use
//! optimistic concurrency: each put carries the [`VersionToken`] the writer
//! read, and the store rejects it if another write landed in between.

mod canonical;
mod file;
mod memory;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use canonical::{to_canonical_bytes, to_canonical_string};
pub use file::{CrashPoint, FileStore};
pub use memory::MemoryStore;

use crate::analytics::{
    validate_activities, ActivityInterval, CleaningReport, DerivedAnalytics, SignalStream, StreamKey,
};
use crate::ingest::{MediaKind, SessionManifest, TestResult};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("media `{media_id}` of session `{session_id}` not found")]
    MediaNotFound { session_id: String, media_id: String },
    #[error("stale write to `{session_id}`: read {expected}, store is at {current}")]
    StaleWrite { session_id: String, expected: TokenDisplay, current: TokenDisplay },
    #[error("activities_version of `{session_id}` would go from {current} to {attempted}")]
    VersionRegression { session_id: String, current: u64, attempted: u64 },
    #[error("invalid session: {0}")]
    InvalidSession(String),
    #[error("storage failure at {path}: {message}")]
    StorageFailure { path: PathBuf, message: String },
    #[error("corrupt document at {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

impl StoreError {
    pub(crate) fn io(path: &Path, e: impl fmt::Display) -> Self {
        StoreError::StorageFailure { path: path.to_path_buf(), message: e.to_string() }
    }
}

/// Optional token rendered for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDisplay(pub Option<VersionToken>);

impl fmt::Display for TokenDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some(t) => t.fmt(f),
            None => f.write_str("<absent>"),
        }
    }
}

/// Identifies one durable write of a session: its activities version plus a
/// store revision counter bumped on every put.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VersionToken {
    pub activities_version: u64,
    pub revision: u64,
}

impl fmt::Display for VersionToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}.r{}", self.activities_version, self.revision)
    }
}

impl FromStr for VersionToken {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed version token `{s}`");
        let (v, r) = s.strip_prefix('v').and_then(|s| s.split_once(".r")).ok_or_else(bad)?;
        Ok(Self { activities_version: v.parse().map_err(|_| bad())?, revision: r.parse().map_err(|_| bad())? })
    }
}

impl Serialize for VersionToken {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VersionToken {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaAsset {
    pub media_id: String,
    pub kind: MediaKind,
    /// Store-relative location, `media/<session_id>/<media_id>`.
    pub path: String,
    pub master_start_ms: i64,
    pub duration_ms: i64,
}

impl MediaAsset {
    pub fn master_end_ms(&self) -> i64 {
        self.master_start_ms + self.duration_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestPair {
    pub pre: TestResult,
    pub post: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamCleaning {
    pub stream: StreamKey,
    pub report: CleaningReport,
}

/// Master-timeline extent of a session; relabeled activities must lie
/// within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSpan {
    pub start_ms: i64,
    pub end_ms: i64,
}

impl SessionSpan {
    pub fn contains_interval(&self, a: &ActivityInterval) -> bool {
        self.start_ms <= a.start_ms && a.end_ms <= self.end_ms
    }
}

/// The anonymized document for one recorded session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub session_start_ms: i64,
    pub span: SessionSpan,
    pub streams: Vec<SignalStream>,
    pub cleaning: Vec<StreamCleaning>,
    pub activities: Vec<ActivityInterval>,
    pub activities_version: u64,
    pub media: Vec<MediaAsset>,
    pub tests: Option<TestPair>,
    /// Stored verbatim; may include medical fields.
    pub demographics: BTreeMap<String, String>,
    pub derived: Option<DerivedAnalytics>,
}

pub fn is_session_id(id: &str) -> bool {
    id.len() == 32 && id.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

impl Session {
    pub fn validate(&self) -> Result<(), StoreError> {
        let invalid = |m: String| Err(StoreError::InvalidSession(m));
        if !is_session_id(&self.session_id) {
            return invalid(format!("session_id `{}` is not 32 lowercase hex chars", self.session_id));
        }
        if self.activities_version < 1 {
            return invalid("activities_version must be >= 1".into());
        }
        if self.span.start_ms > self.span.end_ms {
            return invalid("span start after end".into());
        }
        validate_activities(&self.activities).map_err(|e| StoreError::InvalidSession(e.to_string()))?;
        for s in &self.streams {
            if !s.cleaned || s.samples.is_empty() {
                return invalid(format!("stream {} must be cleaned and non-empty", s.key()));
            }
        }
        for m in &self.media {
            if m.duration_ms <= 0 {
                return invalid(format!("media `{}` has non-positive duration", m.media_id));
            }
        }
        if let Some(d) = &self.derived {
            if d.activities_version > self.activities_version {
                return invalid("derived analytics are ahead of activities_version".into());
            }
        }
        Ok(())
    }

    pub fn stream(&self, key: &StreamKey) -> Option<&SignalStream> {
        self.streams.iter().find(|s| s.matches(key.modality, &key.source_id))
    }

    /// Cached analytics, only if computed from the current activity list.
    pub fn fresh_derived(&self) -> Option<&DerivedAnalytics> {
        self.derived.as_ref().filter(|d| d.activities_version == self.activities_version)
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.session_id.clone(),
            activities_version: self.activities_version,
            stream_count: self.streams.len(),
            activity_count: self.activities.len(),
            media_count: self.media.len(),
            span: self.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub activities_version: u64,
    pub stream_count: usize,
    pub activity_count: usize,
    pub media_count: usize,
    pub span: SessionSpan,
}

/// Links a session to a salted one-way digest of the learner reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnonymizationRecord {
    pub session_id: String,
    pub learner_ref_digest: String,
}

pub(crate) fn learner_digest(salt: &[u8], learner_ref: &str) -> String {
    let mut h = Sha256::new();
    h.update(salt);
    h.update([0u8]);
    h.update(learner_ref.as_bytes());
    hex::encode(h.finalize())
}

pub(crate) fn format_session_id(raw: u128) -> String {
    format!("{raw:032x}")
}

pub trait SessionStore: Send + Sync {
    /// Reserve a fresh session id for `learner_ref`, drawing candidates from
    /// `next_id` until one is unused.
    fn anonymize_with(
        &self,
        learner_ref: &str,
        next_id: &mut dyn FnMut() -> u128,
    ) -> Result<(String, AnonymizationRecord), StoreError>;

    fn anonymize(&self, manifest: &SessionManifest) -> Result<(String, AnonymizationRecord), StoreError> {
        self.anonymize_with(&manifest.learner_ref, &mut || rand::random::<u128>())
    }

    /// Durably write `session`. `expected` must be `None` for a new session
    /// and the token last read otherwise.
    fn put_session(&self, session: &Session, expected: Option<VersionToken>) -> Result<VersionToken, StoreError>;

    fn get_session_with_token(&self, session_id: &str) -> Result<(Session, VersionToken), StoreError>;

    fn get_session(&self, session_id: &str) -> Result<Session, StoreError> {
        self.get_session_with_token(session_id).map(|(s, _)| s)
    }

    /// Summaries sorted by session id.
    fn list_sessions(&self) -> Result<Vec<SessionSummary>, StoreError>;

    fn delete_session(&self, session_id: &str) -> Result<(), StoreError>;

    /// Store a media file for a session; returns its store-relative path.
    fn put_media(&self, session_id: &str, media_id: &str, source: &Path) -> Result<String, StoreError>;

    /// Filesystem location the media bytes can be served from.
    fn media_path(&self, session_id: &str, media_id: &str) -> Result<PathBuf, StoreError>;
}

pub(crate) fn media_rel_path(session_id: &str, media_id: &str) -> String {
    format!("media/{session_id}/{media_id}")
}

pub(crate) fn check_media_id(media_id: &str) -> Result<(), StoreError> {
    let ok = !media_id.is_empty()
        && media_id != "."
        && media_id != ".."
        && media_id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'));
    if ok {
        Ok(())
    } else {
        Err(StoreError::InvalidSession(format!("invalid media id `{media_id}`")))
    }
}

/// Token check shared by both backends.
pub(crate) fn check_write(
    session: &Session,
    current: Option<VersionToken>,
    expected: Option<VersionToken>,
) -> Result<VersionToken, StoreError> {
    session.validate()?;
    if current != expected {
        return Err(StoreError::StaleWrite {
            session_id: session.session_id.clone(),
            expected: TokenDisplay(expected),
            current: TokenDisplay(current),
        });
    }
    if let Some(cur) = current {
        if session.activities_version < cur.activities_version {
            return Err(StoreError::VersionRegression {
                session_id: session.session_id.clone(),
                current: cur.activities_version,
                attempted: session.activities_version,
            });
        }
    }
    Ok(VersionToken { activities_version: session.activities_version, revision: current.map_or(1, |c| c.revision + 1) })
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_roundtrip() {
        let t = VersionToken { activities_version: 3, revision: 7 };
        assert_eq!(t.to_string(), "v3.r7");
        assert_eq!("v3.r7".parse::<VersionToken>().unwrap(), t);
        assert!("3.7".parse::<VersionToken>().is_err());
        assert!("v3.rx".parse::<VersionToken>().is_err());
    }

    #[test]
    fn session_validation() {
        let mut s = testutil::session(1);
        assert!(s.validate().is_ok());
        s.session_id = "ABC".into();
        assert!(s.validate().is_err());
        let mut s = testutil::session(1);
        s.activities.push(ActivityInterval::new("overlap", 2_000, 3_000));
        assert!(s.validate().is_err());
        let mut s = testutil::session(1);
        s.streams[0].cleaned = false;
        assert!(s.validate().is_err());
    }

    #[test]
    fn digest_is_salted() {
        assert_ne!(learner_digest(b"a", "learner"), learner_digest(b"b", "learner"));
        assert_eq!(learner_digest(b"a", "learner").len(), 64);
    }

    #[test]
    fn media_ids() {
        assert!(check_media_id("screen_0.mp4").is_ok());
        assert!(check_media_id("../x").is_err());
        assert!(check_media_id("..").is_err());
        assert!(check_media_id("").is_err());
    }
}
