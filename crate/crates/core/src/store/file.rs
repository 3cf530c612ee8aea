//! Directory-backed store.
//!
//! ```text
//! <root>/sessions/<session_id>.json   canonical {"revision": n, "session": {...}}
//! <root>/media/<session_id>/<media_id>
//! <root>/index.json                   canonical summaries, sorted by id
//! <root>/anonymization.digests        "salt <hex>" then "<session_id> <digest>" lines
//! ```
//!
//! Every document write goes to a temp file in the target directory and is
//! renamed into place, so readers see either the old or the new version.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{
    check_media_id, check_write, format_session_id, is_session_id, learner_digest, media_rel_path, to_canonical_bytes,
    AnonymizationRecord, Session, SessionStore, SessionSummary, StoreError, VersionToken,
};

const TMP_MARKER: &str = ".tmp-";

/// Simulated crash sites for fault-injection tests. A set crash point fires
/// once, on the next session write, and leaves the store as a killed process
/// would.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrashPoint {
    /// Temp document written and synced, rename never happens.
    BeforeRename,
    /// Document renamed into place, index not yet updated.
    BeforeIndexUpdate,
}

#[derive(Serialize, Deserialize)]
struct StoredDocument {
    revision: u64,
    session: Session,
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    revision: u64,
    #[serde(flatten)]
    summary: SessionSummary,
}

#[derive(Serialize, Deserialize, Default)]
struct Index {
    sessions: Vec<IndexEntry>,
}

struct Registry {
    salt: Vec<u8>,
    reserved: HashSet<String>,
}

pub struct FileStore {
    root: PathBuf,
    registry: Mutex<Registry>,
    write_lock: Mutex<()>,
    crash: Mutex<Option<CrashPoint>>,
}

fn write_atomic(path: &Path, bytes: &[u8], crash_before_rename: bool) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    let name = path.file_name().and_then(|n| n.to_str()).expect("store file names are UTF-8");
    let tmp = dir.join(format!("{name}{TMP_MARKER}{:016x}", rand::random::<u64>()));
    let mut f = File::create(&tmp).map_err(|e| StoreError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| StoreError::io(&tmp, e))?;
    f.sync_all().map_err(|e| StoreError::io(&tmp, e))?;
    drop(f);
    if crash_before_rename {
        return Err(StoreError::io(path, "simulated crash before rename"));
    }
    fs::rename(&tmp, path).map_err(|e| StoreError::io(path, e))?;
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

impl FileStore {
    /// Open (creating if needed) a store rooted at `root`. Leftover temp files
    /// from interrupted writes are removed and the index is rebuilt from the
    /// session documents.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for dir in [root.join("sessions"), root.join("media")] {
            fs::create_dir_all(&dir).map_err(|e| StoreError::io(&dir, e))?;
        }
        let registry = Self::load_registry(&root)?;
        let store = Self { root, registry: Mutex::new(registry), write_lock: Mutex::new(()), crash: Mutex::new(None) };
        store.sweep_temp_files()?;
        store.rebuild_index()?;
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn set_crash_point(&self, point: Option<CrashPoint>) {
        *self.crash.lock().unwrap() = point;
    }

    fn take_crash(&self, point: CrashPoint) -> bool {
        let mut c = self.crash.lock().unwrap();
        if *c == Some(point) {
            *c = None;
            true
        } else {
            false
        }
    }

    fn digests_path(root: &Path) -> PathBuf {
        root.join("anonymization.digests")
    }

    fn session_path(&self, session_id: &str) -> PathBuf {
        self.root.join("sessions").join(format!("{session_id}.json"))
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    fn load_registry(root: &Path) -> Result<Registry, StoreError> {
        let path = Self::digests_path(root);
        if !path.exists() {
            let salt: [u8; 32] = rand::random();
            write_atomic(&path, format!("salt {}\n", hex::encode(salt)).as_bytes(), false)?;
            return Ok(Registry { salt: salt.to_vec(), reserved: HashSet::new() });
        }
        let text = fs::read_to_string(&path).map_err(|e| StoreError::io(&path, e))?;
        let corrupt = |m: &str| StoreError::Corrupt { path: path.clone(), message: m.to_string() };
        let mut lines = text.lines();
        let salt = lines
            .next()
            .and_then(|l| l.strip_prefix("salt "))
            .and_then(|h| hex::decode(h).ok())
            .ok_or_else(|| corrupt("missing salt line"))?;
        let mut reserved = HashSet::new();
        for line in lines {
            let (id, _digest) = line.split_once(' ').ok_or_else(|| corrupt("malformed record line"))?;
            reserved.insert(id.to_string());
        }
        Ok(Registry { salt, reserved })
    }

    /// Anonymization records as persisted, in reservation order.
    pub fn anonymization_records(&self) -> Result<Vec<AnonymizationRecord>, StoreError> {
        let path = Self::digests_path(&self.root);
        let text = fs::read_to_string(&path).map_err(|e| StoreError::io(&path, e))?;
        Ok(text
            .lines()
            .skip(1)
            .filter_map(|l| l.split_once(' '))
            .map(|(id, d)| AnonymizationRecord { session_id: id.into(), learner_ref_digest: d.into() })
            .collect())
    }

    fn sweep_temp_files(&self) -> Result<(), StoreError> {
        for dir in [self.root.clone(), self.root.join("sessions")] {
            let entries = fs::read_dir(&dir).map_err(|e| StoreError::io(&dir, e))?;
            for entry in entries.flatten() {
                if entry.file_name().to_string_lossy().contains(TMP_MARKER) {
                    let _ = fs::remove_file(entry.path());
                }
            }
        }
        Ok(())
    }

    fn read_document(&self, session_id: &str) -> Result<StoredDocument, StoreError> {
        if !is_session_id(session_id) {
            return Err(StoreError::NotFound(session_id.to_string()));
        }
        let path = self.session_path(session_id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(session_id.to_string()))
            }
            Err(e) => return Err(StoreError::io(&path, e)),
        };
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt { path, message: e.to_string() })
    }

    fn scan_documents(&self) -> Result<Vec<StoredDocument>, StoreError> {
        let dir = self.root.join("sessions");
        let mut ids: Vec<String> = fs::read_dir(&dir)
            .map_err(|e| StoreError::io(&dir, e))?
            .flatten()
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".json").map(str::to_string))
            .filter(|id| is_session_id(id))
            .collect();
        ids.sort();
        ids.iter().map(|id| self.read_document(id)).collect()
    }

    fn rebuild_index(&self) -> Result<(), StoreError> {
        let _guard = self.write_lock.lock().unwrap();
        let docs = self.scan_documents()?;
        self.write_index(
            docs.into_iter().map(|d| IndexEntry { revision: d.revision, summary: d.session.summary() }).collect(),
        )
    }

    fn read_index(&self) -> Result<Index, StoreError> {
        let path = self.index_path();
        match fs::read(&path) {
            Ok(bytes) => {
                serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt { path, message: e.to_string() })
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Index::default()),
            Err(e) => Err(StoreError::io(&path, e)),
        }
    }

    fn write_index(&self, mut entries: Vec<IndexEntry>) -> Result<(), StoreError> {
        entries.sort_by(|a, b| a.summary.session_id.cmp(&b.summary.session_id));
        let bytes = to_canonical_bytes(&Index { sessions: entries }).expect("index serializes");
        write_atomic(&self.index_path(), &bytes, false)
    }

    fn current_token(&self, session_id: &str) -> Result<Option<VersionToken>, StoreError> {
        match self.read_document(session_id) {
            Ok(d) => Ok(Some(VersionToken { activities_version: d.session.activities_version, revision: d.revision })),
            Err(StoreError::NotFound(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

impl SessionStore for FileStore {
    fn anonymize_with(
        &self,
        learner_ref: &str,
        next_id: &mut dyn FnMut() -> u128,
    ) -> Result<(String, AnonymizationRecord), StoreError> {
        let _guard = self.write_lock.lock().unwrap();
        let mut reg = self.registry.lock().unwrap();
        let session_id = loop {
            let id = format_session_id(next_id());
            if !reg.reserved.contains(&id) && !self.session_path(&id).exists() {
                break id;
            }
        };
        let record = AnonymizationRecord {
            session_id: session_id.clone(),
            learner_ref_digest: learner_digest(&reg.salt, learner_ref),
        };
        let path = Self::digests_path(&self.root);
        let mut f = OpenOptions::new().append(true).open(&path).map_err(|e| StoreError::io(&path, e))?;
        writeln!(f, "{} {}", record.session_id, record.learner_ref_digest).map_err(|e| StoreError::io(&path, e))?;
        f.sync_all().map_err(|e| StoreError::io(&path, e))?;
        reg.reserved.insert(session_id.clone());
        Ok((session_id, record))
    }

    fn put_session(&self, session: &Session, expected: Option<VersionToken>) -> Result<VersionToken, StoreError> {
        let _guard = self.write_lock.lock().unwrap();
        session.validate()?;
        let current = self.current_token(&session.session_id)?;
        let token = check_write(session, current, expected)?;

        let doc = StoredDocument { revision: token.revision, session: session.clone() };
        let bytes = to_canonical_bytes(&doc).map_err(|e| StoreError::InvalidSession(e.to_string()))?;
        let path = self.session_path(&session.session_id);
        write_atomic(&path, &bytes, self.take_crash(CrashPoint::BeforeRename))?;
        if self.take_crash(CrashPoint::BeforeIndexUpdate) {
            return Err(StoreError::io(&self.index_path(), "simulated crash before index update"));
        }

        let mut index = self.read_index()?;
        index.sessions.retain(|e| e.summary.session_id != session.session_id);
        index.sessions.push(IndexEntry { revision: token.revision, summary: session.summary() });
        self.write_index(index.sessions)?;
        Ok(token)
    }

    fn get_session_with_token(&self, session_id: &str) -> Result<(Session, VersionToken), StoreError> {
        let doc = self.read_document(session_id)?;
        let token = VersionToken { activities_version: doc.session.activities_version, revision: doc.revision };
        Ok((doc.session, token))
    }

    fn list_sessions(&self) -> Result<Vec<SessionSummary>, StoreError> {
        Ok(self.read_index()?.sessions.into_iter().map(|e| e.summary).collect())
    }

    fn delete_session(&self, session_id: &str) -> Result<(), StoreError> {
        let _guard = self.write_lock.lock().unwrap();
        self.read_document(session_id)?;
        let path = self.session_path(session_id);
        fs::remove_file(&path).map_err(|e| StoreError::io(&path, e))?;
        let media = self.root.join("media").join(session_id);
        if media.exists() {
            fs::remove_dir_all(&media).map_err(|e| StoreError::io(&media, e))?;
        }
        let mut index = self.read_index()?;
        index.sessions.retain(|e| e.summary.session_id != session_id);
        self.write_index(index.sessions)
    }

    fn put_media(&self, session_id: &str, media_id: &str, source: &Path) -> Result<String, StoreError> {
        check_media_id(media_id)?;
        if !is_session_id(session_id) {
            return Err(StoreError::InvalidSession(format!("invalid session id `{session_id}`")));
        }
        let dir = self.root.join("media").join(session_id);
        fs::create_dir_all(&dir).map_err(|e| StoreError::io(&dir, e))?;
        let target = dir.join(media_id);
        let tmp = dir.join(format!("{media_id}{TMP_MARKER}{:016x}", rand::random::<u64>()));
        fs::copy(source, &tmp).map_err(|e| StoreError::io(source, e))?;
        fs::rename(&tmp, &target).map_err(|e| StoreError::io(&target, e))?;
        Ok(media_rel_path(session_id, media_id))
    }

    fn media_path(&self, session_id: &str, media_id: &str) -> Result<PathBuf, StoreError> {
        let missing = || StoreError::MediaNotFound { session_id: session_id.into(), media_id: media_id.into() };
        if !is_session_id(session_id) || check_media_id(media_id).is_err() {
            return Err(missing());
        }
        let path = self.root.join(media_rel_path(session_id, media_id));
        if path.is_file() {
            Ok(path)
        } else {
            Err(missing())
        }
    }
}
