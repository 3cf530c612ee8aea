use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use super::{
    check_media_id, check_write, format_session_id, learner_digest, media_rel_path, AnonymizationRecord, Session,
    SessionStore, SessionSummary, StoreError, VersionToken,
};

/// In-process store. Media are referenced at their original location rather
/// than copied.
pub struct MemoryStore {
    salt: [u8; 32],
    sessions: RwLock<BTreeMap<String, (Session, VersionToken)>>,
    records: RwLock<Vec<AnonymizationRecord>>,
    media: RwLock<BTreeMap<(String, String), PathBuf>>,
    write_lock: Mutex<()>,
}

impl Default for MemoryStore {
    fn default() -> Self {
        Self::new()
    }
}

impl MemoryStore {
    pub fn new() -> Self {
        Self {
            salt: rand::random(),
            sessions: RwLock::default(),
            records: RwLock::default(),
            media: RwLock::default(),
            write_lock: Mutex::new(()),
        }
    }

    pub fn anonymization_records(&self) -> Vec<AnonymizationRecord> {
        self.records.read().unwrap().clone()
    }
}

impl SessionStore for MemoryStore {
    fn anonymize_with(
        &self,
        learner_ref: &str,
        next_id: &mut dyn FnMut() -> u128,
    ) -> Result<(String, AnonymizationRecord), StoreError> {
        let _guard = self.write_lock.lock().unwrap();
        let sessions = self.sessions.read().unwrap();
        let mut records = self.records.write().unwrap();
        let reserved: HashSet<&str> = records.iter().map(|r| r.session_id.as_str()).collect();
        let session_id = loop {
            let id = format_session_id(next_id());
            if !sessions.contains_key(&id) && !reserved.contains(id.as_str()) {
                break id;
            }
        };
        let record = AnonymizationRecord {
            session_id: session_id.clone(),
            learner_ref_digest: learner_digest(&self.salt, learner_ref),
        };
        records.push(record.clone());
        Ok((session_id, record))
    }

    fn put_session(&self, session: &Session, expected: Option<VersionToken>) -> Result<VersionToken, StoreError> {
        let _guard = self.write_lock.lock().unwrap();
        let current = self.sessions.read().unwrap().get(&session.session_id).map(|(_, t)| *t);
        let token = check_write(session, current, expected)?;
        self.sessions.write().unwrap().insert(session.session_id.clone(), (session.clone(), token));
        Ok(token)
    }

    fn get_session_with_token(&self, session_id: &str) -> Result<(Session, VersionToken), StoreError> {
        self.sessions
            .read()
            .unwrap()
            .get(session_id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(session_id.to_string()))
    }

    fn list_sessions(&self) -> Result<Vec<SessionSummary>, StoreError> {
        Ok(self.sessions.read().unwrap().values().map(|(s, _)| s.summary()).collect())
    }

    fn delete_session(&self, session_id: &str) -> Result<(), StoreError> {
        let _guard = self.write_lock.lock().unwrap();
        self.sessions
            .write()
            .unwrap()
            .remove(session_id)
            .ok_or_else(|| StoreError::NotFound(session_id.to_string()))?;
        self.media.write().unwrap().retain(|(sid, _), _| sid != session_id);
        Ok(())
    }

    fn put_media(&self, session_id: &str, media_id: &str, source: &Path) -> Result<String, StoreError> {
        check_media_id(media_id)?;
        if !source.is_file() {
            return Err(StoreError::io(source, "not a readable file"));
        }
        self.media.write().unwrap().insert((session_id.to_string(), media_id.to_string()), source.to_path_buf());
        Ok(media_rel_path(session_id, media_id))
    }

    fn media_path(&self, session_id: &str, media_id: &str) -> Result<PathBuf, StoreError> {
        self.media
            .read()
            .unwrap()
            .get(&(session_id.to_string(), media_id.to_string()))
            .cloned()
            .ok_or_else(|| StoreError::MediaNotFound { session_id: session_id.into(), media_id: media_id.into() })
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::session;
    use super::*;

    #[test]
    fn put_get_list() {
        let store = MemoryStore::new();
        assert!(store.list_sessions().unwrap().is_empty());
        let s = session(2);
        let t = store.put_session(&s, None).unwrap();
        assert_eq!(t, VersionToken { activities_version: 1, revision: 1 });
        assert_eq!(store.get_session(&s.session_id).unwrap(), s);
        assert!(matches!(store.get_session("nope"), Err(StoreError::NotFound(_))));
    }

    #[test]
    fn stale_token_rejected() {
        let store = MemoryStore::new();
        let s = session(3);
        let t1 = store.put_session(&s, None).unwrap();
        let mut a = s.clone();
        a.activities_version = 2;
        store.put_session(&a, Some(t1)).unwrap();
        let mut b = s.clone();
        b.activities_version = 2;
        b.activities[0].name = "lecture".into();
        assert!(matches!(store.put_session(&b, Some(t1)), Err(StoreError::StaleWrite { .. })));
        assert_eq!(store.get_session(&s.session_id).unwrap(), a);
        // creating over an existing session without a token is also stale
        assert!(matches!(store.put_session(&s, None), Err(StoreError::StaleWrite { .. })));
    }

    #[test]
    fn version_cannot_regress() {
        let store = MemoryStore::new();
        let mut s = session(4);
        s.activities_version = 3;
        let t = store.put_session(&s, None).unwrap();
        s.activities_version = 2;
        assert!(matches!(store.put_session(&s, Some(t)), Err(StoreError::VersionRegression { .. })));
    }

    #[test]
    fn anonymize_retries_on_collision() {
        let store = MemoryStore::new();
        store.put_session(&session(5), None).unwrap();
        let mut candidates = vec![5u128, 5, 6].into_iter();
        let (id, rec) = store.anonymize_with("learner-a", &mut || candidates.next().unwrap()).unwrap();
        assert_eq!(id, format_session_id(6));
        assert_eq!(rec.session_id, id);
        // reserved ids are not handed out twice
        let mut again = vec![6u128, 7].into_iter();
        let (id2, _) = store.anonymize_with("learner-a", &mut || again.next().unwrap()).unwrap();
        assert_eq!(id2, format_session_id(7));
    }
}
