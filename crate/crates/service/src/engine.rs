//! The operations behind both the HTTP API and the CLI.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use mmla_core::analytics::{
    clean_signal, compare_tests, correlate_streams, rank_activities, segment_by_activity, session_activity_stats,
    smooth_sliding_window_with, validate_activities, ActivityInterval, ActivityStats, AnalyticsParams, CleaningReport,
    CorrelationMatrix, DerivedAnalytics, SignalStream, StreamExtrema, StreamKey, TestComparison, UNASSIGNED,
};
use mmla_core::ingest::{
    parse_activity_log, parse_manifest, parse_signal_file, parse_test_file, ClockSpec, MediaKind, Modality,
    SessionManifest, TestKind,
};
use mmla_core::store::{
    MediaAsset, Session, SessionSpan, SessionStore, SessionSummary, StoreError, StreamCleaning, TestPair,
};
use mmla_core::timeline::{apply_clock_mapping, estimate_clock_mapping, ClockMapping, Sample};
use mmla_core::Exec;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{ErrorCode, ServiceError};

pub type Result<T> = std::result::Result<T, ServiceError>;

#[derive(Clone)]
pub struct Engine {
    store: Arc<dyn SessionStore>,
    config: Arc<Config>,
    exec: Exec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOutcome {
    pub session_id: String,
    pub activities_version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelabelRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub base_version: u64,
    pub activities: Vec<ActivityInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamInfo {
    pub modality: Modality,
    pub source_id: String,
    pub n_samples: usize,
    pub first_ms: i64,
    pub last_ms: i64,
    pub cleaning: Option<CleaningReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub activities_version: u64,
    pub session_start_ms: i64,
    pub span: SessionSpan,
    pub streams: Vec<StreamInfo>,
    pub activities: Vec<ActivityInterval>,
    pub media_count: usize,
    pub has_tests: bool,
    pub demographics: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivitiesPayload {
    pub session_id: String,
    pub activities_version: u64,
    pub span: SessionSpan,
    pub activities: Vec<ActivityInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamPayload {
    pub session_id: String,
    pub activities_version: u64,
    pub modality: Modality,
    pub source_id: String,
    pub smooth_window_ms: Option<u64>,
    pub activity: Option<String>,
    pub samples: Vec<Sample>,
    /// Bands for chart shading.
    pub activities: Vec<ActivityInterval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticsKind {
    ActivityStats,
    Correlations,
    Extrema,
    Ranking,
    TestComparison,
}

impl AnalyticsKind {
    pub const ALL: [AnalyticsKind; 5] = [
        AnalyticsKind::ActivityStats,
        AnalyticsKind::Correlations,
        AnalyticsKind::Extrema,
        AnalyticsKind::Ranking,
        AnalyticsKind::TestComparison,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnalyticsKind::ActivityStats => "activity_stats",
            AnalyticsKind::Correlations => "correlations",
            AnalyticsKind::Extrema => "extrema",
            AnalyticsKind::Ranking => "ranking",
            AnalyticsKind::TestComparison => "test_comparison",
        }
    }
}

impl std::str::FromStr for AnalyticsKind {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ServiceError::bad_params(format!("unknown analytics kind `{s}`")))
    }
}

/// Optional parameters of an analytics request. Unset values fall back to
/// the configured defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticsQuery {
    pub modality: Option<Modality>,
    pub source: Option<String>,
    pub activity: Option<String>,
    pub window_ms: Option<u64>,
    pub step_ms: Option<i64>,
    pub prominence_frac: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedActivity {
    pub activity_name: String,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnalyticsResult {
    ActivityStats(Vec<ActivityStats>),
    Correlations(CorrelationMatrix),
    Extrema(Vec<StreamExtrema>),
    Ranking(Vec<RankedActivity>),
    TestComparison(TestComparison),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsPayload {
    pub session_id: String,
    pub activities_version: u64,
    pub kind: AnalyticsKind,
    pub params: AnalyticsParams,
    pub result: AnalyticsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaEntry {
    pub media_id: String,
    pub kind: MediaKind,
    pub url: String,
    pub master_start_ms: i64,
    pub duration_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaManifest {
    pub session_id: String,
    pub assets: Vec<MediaEntry>,
}

pub fn media_url(session_id: &str, media_id: &str) -> String {
    format!("/media/{session_id}/{media_id}")
}

fn read(stage: &str, path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| ServiceError::ingest(stage, path, e))
}

fn media_id(kind: MediaKind, index: usize, path: &str) -> String {
    let ext = Path::new(path)
        .extension()
        .and_then(|e| e.to_str())
        .filter(|e| !e.is_empty() && e.bytes().all(|b| b.is_ascii_alphanumeric()))
        .map(|e| format!(".{}", e.to_ascii_lowercase()))
        .unwrap_or_default();
    format!("{}_{index}{ext}", kind.as_str())
}

/// One clock per source: explicit mappings as given, marker pairs fitted,
/// identity for sources that declare nothing.
fn resolve_clocks(manifest: &SessionManifest, manifest_path: &Path) -> Result<HashMap<String, ClockMapping>> {
    let mut clocks = HashMap::new();
    for entry in &manifest.signal_files {
        if clocks.contains_key(&entry.source_id) {
            continue;
        }
        let mapping = match manifest.clock_for(&entry.source_id) {
            None => ClockMapping::IDENTITY,
            Some(ClockSpec::Mapping(m)) => *m,
            Some(ClockSpec::Markers(pairs)) => estimate_clock_mapping(pairs).map_err(|e| {
                ServiceError::ingest(
                    "estimate_clock_mapping",
                    manifest_path,
                    format!("source `{}`: {e}", entry.source_id),
                )
            })?,
        };
        clocks.insert(entry.source_id.clone(), mapping);
    }
    Ok(clocks)
}

impl Engine {
    pub fn new(store: Arc<dyn SessionStore>, config: Config) -> Self {
        Self { store, config: Arc::new(config), exec: Exec::default() }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn store(&self) -> &Arc<dyn SessionStore> {
        &self.store
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// Parse, align, clean, assemble, anonymize and persist one session.
    /// File paths in the manifest are relative to its directory.
    pub fn ingest_session(&self, manifest_path: &Path) -> Result<IngestOutcome> {
        let manifest_bytes = read("read_manifest", manifest_path)?;
        let manifest =
            parse_manifest(&manifest_bytes).map_err(|e| ServiceError::ingest("parse_manifest", manifest_path, e))?;
        let base = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let resolve = |p: &str| -> PathBuf { base.join(p) };

        let clocks = resolve_clocks(&manifest, manifest_path)?;
        let ranges = &self.config.ranges;
        let cleaned = self.exec.try_map_slice(&manifest.signal_files, |entry| {
            let path = resolve(&entry.path);
            let bytes = read("parse_signal_file", &path)?;
            let raw = parse_signal_file(&bytes, entry.modality)
                .map_err(|e| ServiceError::ingest("parse_signal_file", &path, e))?;
            let samples = apply_clock_mapping(&raw, &clocks[&entry.source_id]);
            let stream = SignalStream::new(entry.modality, entry.source_id.clone(), samples);
            clean_signal(stream, ranges.get(entry.modality)).map_err(|e| ServiceError::ingest("clean_signal", &path, e))
        })?;
        let mut streams = Vec::with_capacity(cleaned.len());
        let mut cleaning = Vec::with_capacity(cleaned.len());
        for (stream, report) in cleaned {
            cleaning.push(StreamCleaning { stream: stream.key(), report });
            streams.push(stream);
        }

        let activity_path = resolve(&manifest.activity_file);
        let records = parse_activity_log(&read("parse_activity_log", &activity_path)?)
            .map_err(|e| ServiceError::ingest("parse_activity_log", &activity_path, e))?;
        // the activity log's clock is the master timeline
        let activities: Vec<ActivityInterval> =
            records.into_iter().map(|r| ActivityInterval::new(r.name, r.start_ms, r.end_ms)).collect();
        validate_activities(&activities).map_err(|e| ServiceError::ingest("assemble_session", &activity_path, e))?;

        let tests = match &manifest.test_files {
            None => None,
            Some(t) => {
                let load = |rel: &str, kind| {
                    let path = resolve(rel);
                    parse_test_file(&read("parse_test_file", &path)?, kind)
                        .map_err(|e| ServiceError::ingest("parse_test_file", &path, e))
                };
                Some(TestPair {
                    pre: load(&t.pretest, TestKind::Pretest)?,
                    post: load(&t.posttest, TestKind::Posttest)?,
                })
            }
        };

        let mut media = Vec::with_capacity(manifest.media_files.len());
        let mut media_sources = Vec::with_capacity(manifest.media_files.len());
        for (i, m) in manifest.media_files.iter().enumerate() {
            let path = resolve(&m.path);
            if !path.is_file() {
                return Err(ServiceError::ingest("read_media", &path, "file not found"));
            }
            let clock = clocks.get(&m.source_id).copied().unwrap_or(ClockMapping::IDENTITY);
            let start = clock.map_ms(m.source_start_ms);
            let duration = clock.map_ms(m.source_start_ms + m.duration_ms) - start;
            if duration <= 0 {
                return Err(ServiceError::ingest("map_media", &path, "duration is not positive on the master clock"));
            }
            let id = media_id(m.kind, i, &m.path);
            media.push(MediaAsset {
                media_id: id,
                kind: m.kind,
                path: String::new(),
                master_start_ms: start,
                duration_ms: duration,
            });
            media_sources.push(path);
        }

        let span = session_span(manifest.session_start_ms, &streams, &activities, &media);
        let version = 1;
        let derived = DerivedAnalytics::compute(
            &streams,
            &activities,
            tests.as_ref().map(|t| (&t.pre, &t.post)),
            version,
            self.config.params,
            self.exec,
        )
        .map_err(|e| ServiceError::ingest("compute_analytics", manifest_path, e))?;

        let (session_id, _) = self.store.anonymize(&manifest)?;
        for (asset, source) in media.iter_mut().zip(&media_sources) {
            asset.path = self
                .store
                .put_media(&session_id, &asset.media_id, source)
                .map_err(|e| ServiceError::ingest("store_media", source, e))?;
        }
        let session = Session {
            session_id: session_id.clone(),
            session_start_ms: manifest.session_start_ms,
            span,
            streams,
            cleaning,
            activities,
            activities_version: version,
            media,
            tests,
            demographics: manifest.demographics,
            derived: Some(derived),
        };
        self.store.put_session(&session, None)?;
        tracing::info!(session_id = %session_id, "ingested {}", manifest_path.display());
        Ok(IngestOutcome { session_id, activities_version: version })
    }

    /// Replace the activity list of a session, provided the editor saw the
    /// current version. Derived analytics are recomputed before the write.
    pub fn relabel(&self, session_id: &str, req: &RelabelRequest) -> Result<u64> {
        if let Some(id) = &req.session_id {
            if id != session_id {
                return Err(ServiceError::bad_params(format!("body session_id `{id}` does not match `{session_id}`")));
            }
        }
        let (session, token) = self.store.get_session_with_token(session_id)?;
        if req.base_version != session.activities_version {
            return Err(ServiceError::new(
                ErrorCode::VersionConflict,
                format!(
                    "base_version {} is stale; session is at activities_version {}",
                    req.base_version, session.activities_version
                ),
            ));
        }
        validate_activities(&req.activities)?;
        if let Some(a) = req.activities.iter().find(|a| !session.span.contains_interval(a)) {
            return Err(ServiceError::new(
                ErrorCode::OutOfBounds,
                format!(
                    "activity {a} lies outside the session span [{}, {})",
                    session.span.start_ms, session.span.end_ms
                ),
            ));
        }
        let version = session.activities_version + 1;
        let derived = DerivedAnalytics::compute(
            &session.streams,
            &req.activities,
            session.tests.as_ref().map(|t| (&t.pre, &t.post)),
            version,
            self.config.params,
            self.exec,
        )?;
        let updated = Session {
            activities: req.activities.clone(),
            activities_version: version,
            derived: Some(derived),
            ..session
        };
        self.store.put_session(&updated, Some(token)).map_err(|e| match e {
            StoreError::StaleWrite { .. } => ServiceError::new(
                ErrorCode::VersionConflict,
                format!("session `{session_id}` changed while relabeling"),
            ),
            other => other.into(),
        })?;
        Ok(version)
    }

    pub fn list_sessions(&self) -> Result<Vec<SessionSummary>> {
        Ok(self.store.list_sessions()?)
    }

    pub fn get_session(&self, session_id: &str) -> Result<Session> {
        Ok(self.store.get_session(session_id)?)
    }

    pub fn session_view(&self, session_id: &str) -> Result<SessionView> {
        let s = self.get_session(session_id)?;
        let streams = s
            .streams
            .iter()
            .map(|st| StreamInfo {
                modality: st.modality,
                source_id: st.source_id.clone(),
                n_samples: st.samples.len(),
                first_ms: st.samples.first().map_or(0, |x| x.t_ms),
                last_ms: st.samples.last().map_or(0, |x| x.t_ms),
                cleaning: s.cleaning.iter().find(|c| c.stream == st.key()).map(|c| c.report),
            })
            .collect();
        Ok(SessionView {
            session_id: s.session_id,
            activities_version: s.activities_version,
            session_start_ms: s.session_start_ms,
            span: s.span,
            streams,
            activities: s.activities,
            media_count: s.media.len(),
            has_tests: s.tests.is_some(),
            demographics: s.demographics,
        })
    }

    pub fn activities(&self, session_id: &str) -> Result<ActivitiesPayload> {
        let s = self.get_session(session_id)?;
        Ok(ActivitiesPayload {
            session_id: s.session_id,
            activities_version: s.activities_version,
            span: s.span,
            activities: s.activities,
        })
    }

    /// Cleaned samples of one stream, smoothed over the whole stream first
    /// and then restricted to one activity if asked.
    pub fn get_stream(
        &self,
        session_id: &str,
        modality: Modality,
        source_id: &str,
        smooth_ms: Option<u64>,
        activity: Option<&str>,
    ) -> Result<StreamPayload> {
        let s = self.get_session(session_id)?;
        let key = StreamKey::new(modality, source_id);
        let stream = s.stream(&key).ok_or_else(|| {
            ServiceError::new(ErrorCode::NotFound, format!("session `{session_id}` has no stream {key}"))
        })?;
        let mut samples = match smooth_ms {
            Some(w) => smooth_sliding_window_with(&stream.samples, w, self.exec),
            None => stream.samples.clone(),
        };
        if let Some(name) = activity {
            check_activity(&s, name)?;
            samples = segment_by_activity(&samples, &s.activities)?
                .into_iter()
                .filter(|(_, label)| *label == name)
                .map(|(sample, _)| sample)
                .collect();
        }
        Ok(StreamPayload {
            session_id: s.session_id,
            activities_version: s.activities_version,
            modality,
            source_id: source_id.to_string(),
            smooth_window_ms: smooth_ms,
            activity: activity.map(str::to_string),
            samples,
            activities: s.activities,
        })
    }

    pub fn get_analytics(&self, session_id: &str, kind: AnalyticsKind, q: &AnalyticsQuery) -> Result<AnalyticsPayload> {
        let s = self.get_session(session_id)?;
        analytics_for(&s, kind, q, self.config.params, self.exec)
    }

    pub fn media_manifest(&self, session_id: &str) -> Result<MediaManifest> {
        let s = self.get_session(session_id)?;
        Ok(MediaManifest {
            assets: s
                .media
                .iter()
                .map(|m| MediaEntry {
                    media_id: m.media_id.clone(),
                    kind: m.kind,
                    url: media_url(&s.session_id, &m.media_id),
                    master_start_ms: m.master_start_ms,
                    duration_ms: m.duration_ms,
                })
                .collect(),
            session_id: s.session_id,
        })
    }

    pub fn media_path(&self, session_id: &str, media_id: &str) -> Result<PathBuf> {
        Ok(self.store.media_path(session_id, media_id)?)
    }
}

/// Extent of everything recorded: from the earlier of the declared start and
/// the first datum to just past the last sample, activity or media end.
pub fn session_span(
    session_start_ms: i64,
    streams: &[SignalStream],
    activities: &[ActivityInterval],
    media: &[MediaAsset],
) -> SessionSpan {
    let mut start = session_start_ms;
    let mut end = session_start_ms;
    for (a, b) in streams.iter().filter_map(SignalStream::span) {
        start = start.min(a);
        end = end.max(b + 1);
    }
    for a in activities {
        start = start.min(a.start_ms);
        end = end.max(a.end_ms);
    }
    for m in media {
        start = start.min(m.master_start_ms);
        end = end.max(m.master_end_ms());
    }
    SessionSpan { start_ms: start, end_ms: end }
}

fn check_activity(s: &Session, name: &str) -> Result<()> {
    if name == UNASSIGNED || s.activities.iter().any(|a| a.name == name) {
        Ok(())
    } else {
        Err(ServiceError::new(
            ErrorCode::UnknownActivity,
            format!("session `{}` has no activity `{name}`", s.session_id),
        ))
    }
}

fn stream_filter<'a>(q: &'a AnalyticsQuery) -> impl Fn(Modality, &str) -> bool + 'a {
    move |m, src| q.modality.is_none_or(|qm| qm == m) && q.source.as_deref().is_none_or(|qs| qs == src)
}

/// Serve one analytics kind for a stored session: from the cached derived
/// analytics when they match the current activities and parameters,
/// otherwise computed on the spot with the same functions.
pub fn analytics_for(
    s: &Session,
    kind: AnalyticsKind,
    q: &AnalyticsQuery,
    defaults: AnalyticsParams,
    exec: Exec,
) -> Result<AnalyticsPayload> {
    let params = AnalyticsParams {
        window_ms: q.window_ms.unwrap_or(defaults.window_ms),
        step_ms: q.step_ms.unwrap_or(defaults.step_ms),
        prominence_frac: q.prominence_frac.unwrap_or(defaults.prominence_frac),
    };
    let cached = s.fresh_derived().filter(|d| d.params == params);
    let keep = stream_filter(q);
    let result = match kind {
        AnalyticsKind::ActivityStats => {
            let all = match cached {
                Some(d) => d.activity_stats.clone(),
                None => session_activity_stats(&s.streams, &s.activities, exec)?,
            };
            AnalyticsResult::ActivityStats(all.into_iter().filter(|a| keep(a.modality, &a.source_id)).collect())
        }
        AnalyticsKind::Correlations => {
            let within = match q.activity.as_deref() {
                None => None,
                Some(name) => {
                    check_activity(s, name)?;
                    let mut named: Vec<&ActivityInterval> = s.activities.iter().filter(|a| a.name == name).collect();
                    named.sort_by_key(|a| a.start_ms);
                    Some(*named.first().ok_or_else(|| {
                        ServiceError::bad_params("correlations can be restricted to a named activity only")
                    })?)
                }
            };
            match (cached.and_then(|d| d.correlations.as_ref()), within) {
                (Some(m), None) => AnalyticsResult::Correlations(m.clone()),
                _ => AnalyticsResult::Correlations(correlate_streams(&s.streams, params.step_ms, within, exec)?),
            }
        }
        AnalyticsKind::Extrema => {
            let all = match cached {
                Some(d) => d.extrema.clone(),
                None => s
                    .streams
                    .iter()
                    .filter(|st| keep(st.modality, &st.source_id))
                    .map(|st| StreamExtrema::compute(st, &s.activities, params.window_ms, params.prominence_frac, exec))
                    .collect::<std::result::Result<Vec<_>, _>>()?,
            };
            AnalyticsResult::Extrema(all.into_iter().filter(|e| keep(e.stream.modality, &e.stream.source_id)).collect())
        }
        AnalyticsKind::Ranking => {
            let (Some(modality), Some(source)) = (q.modality, q.source.as_deref()) else {
                return Err(ServiceError::bad_params("ranking needs both `modality` and `source`"));
            };
            let stats = match cached {
                Some(d) => d.activity_stats.clone(),
                None => session_activity_stats(&s.streams, &s.activities, exec)?,
            };
            let ranked = rank_activities(&stats, modality, source, &s.activities)?;
            AnalyticsResult::Ranking(
                ranked.into_iter().map(|(activity_name, mean)| RankedActivity { activity_name, mean }).collect(),
            )
        }
        AnalyticsKind::TestComparison => {
            let comparison = match (cached.and_then(|d| d.test_comparison.clone()), &s.tests) {
                (Some(c), _) => c,
                (None, Some(t)) => compare_tests(&t.pre, &t.post)?,
                (None, None) => {
                    return Err(ServiceError::new(
                        ErrorCode::NotFound,
                        format!("session `{}` has no test results", s.session_id),
                    ))
                }
            };
            AnalyticsResult::TestComparison(comparison)
        }
    };
    Ok(AnalyticsPayload {
        session_id: s.session_id.clone(),
        activities_version: s.activities_version,
        kind,
        params,
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mmla_core::fixture::{write_demo_session, DemoOptions, DEMO_START_MS};
    use mmla_core::store::MemoryStore;

    fn engine() -> Engine {
        Engine::new(Arc::new(MemoryStore::new()), Config::default())
    }

    #[test]
    fn media_ids_keep_safe_extensions() {
        assert_eq!(media_id(MediaKind::Screen, 0, "media/screen.MP4"), "screen_0.mp4");
        assert_eq!(media_id(MediaKind::WebcamSide, 2, "cam side"), "webcam_side_2");
        assert_eq!(media_id(MediaKind::FixationOverlay, 3, "x.m p4"), "fixation_overlay_3");
    }

    #[test]
    fn span_covers_every_datum() {
        let mut st = SignalStream::new(Modality::Attention, "eeg", vec![Sample::new(-5, 1.0), Sample::new(50, 1.0)]);
        st.cleaned = true;
        let span = session_span(0, &[st], &[ActivityInterval::new("a", 10, 40)], &[]);
        assert_eq!(span, SessionSpan { start_ms: -5, end_ms: 51 });
    }

    #[test]
    fn missing_signal_names_path_and_stage() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_demo_session(dir.path(), &DemoOptions::default()).unwrap();
        let missing = dir.path().join("signals/heart_rate_watch_L.csv");
        std::fs::remove_file(&missing).unwrap();
        let err = engine().ingest_session(&manifest).unwrap_err();
        assert_eq!(err.code, ErrorCode::IngestFailed);
        assert_eq!(err.stage.as_deref(), Some("parse_signal_file"));
        assert!(err.message.contains(&missing.display().to_string()), "{}", err.message);
    }

    #[test]
    fn relabel_validation_order() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_demo_session(dir.path(), &DemoOptions::default()).unwrap();
        let e = engine();
        let id = e.ingest_session(&manifest).unwrap().session_id;
        let req =
            |v, acts: Vec<ActivityInterval>| RelabelRequest { session_id: None, base_version: v, activities: acts };
        let t0 = DEMO_START_MS;

        let missing = "0".repeat(32);
        assert_eq!(e.relabel(&missing, &req(1, vec![])).unwrap_err().code, ErrorCode::NotFound);
        assert_eq!(e.relabel(&id, &req(7, vec![])).unwrap_err().code, ErrorCode::VersionConflict);
        let overlapping = vec![ActivityInterval::new("a", t0, t0 + 10), ActivityInterval::new("b", t0 + 5, t0 + 20)];
        assert_eq!(e.relabel(&id, &req(1, overlapping)).unwrap_err().code, ErrorCode::OverlappingActivities);
        let outside = vec![ActivityInterval::new("a", t0 - 1_000_000, t0)];
        assert_eq!(e.relabel(&id, &req(1, outside)).unwrap_err().code, ErrorCode::OutOfBounds);
        let mut body = req(1, vec![ActivityInterval::new("all", t0, t0 + 1000)]);
        body.session_id = Some(missing);
        assert_eq!(e.relabel(&id, &body).unwrap_err().code, ErrorCode::BadParams);

        assert_eq!(e.get_session(&id).unwrap().activities_version, 1);
        assert_eq!(e.relabel(&id, &req(1, vec![ActivityInterval::new("all", t0, t0 + 1000)])).unwrap(), 2);
        let s = e.get_session(&id).unwrap();
        assert_eq!(s.fresh_derived().unwrap().activities_version, 2);
    }

    #[test]
    fn analytics_kinds_and_bad_params() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_demo_session(dir.path(), &DemoOptions::default()).unwrap();
        let e = engine();
        let id = e.ingest_session(&manifest).unwrap().session_id;
        for kind in AnalyticsKind::ALL {
            let q = AnalyticsQuery {
                modality: Some(Modality::Attention),
                source: Some("eeg_band".into()),
                ..Default::default()
            };
            let p = e.get_analytics(&id, kind, &q).unwrap();
            assert_eq!(p.activities_version, 1);
        }
        let err = e.get_analytics(&id, AnalyticsKind::Ranking, &AnalyticsQuery::default()).unwrap_err();
        assert_eq!(err.code, ErrorCode::BadParams);
        let q = AnalyticsQuery { activity: Some("nap".into()), ..Default::default() };
        assert_eq!(e.get_analytics(&id, AnalyticsKind::Correlations, &q).unwrap_err().code, ErrorCode::UnknownActivity);
        let q = AnalyticsQuery { prominence_frac: Some(1.5), ..Default::default() };
        assert_eq!(e.get_analytics(&id, AnalyticsKind::Extrema, &q).unwrap_err().code, ErrorCode::BadParams);
        assert!("peaks".parse::<AnalyticsKind>().is_err());
    }
}
