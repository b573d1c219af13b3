//! Session registry backed by one JSON file per session.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};

use crate::error::{Result, ServiceError};
use crate::session::{
    valid_session_id, BatchView, CreateRequest, EstimateView, LabelIn, Session, SubmitView,
};

type Handle = Arc<Mutex<Session>>;

pub struct SessionStore {
    dir: PathBuf,
    sessions: Mutex<HashMap<String, Handle>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    /// Write to a temporary file, sync, then rename over the old file.
    fn persist(&self, session: &Session) -> Result<()> {
        let path = self.path(session.id());
        let tmp = self.dir.join(format!(".{}.json.tmp", session.id()));
        let mut f = File::create(&tmp)?;
        f.write_all(&session.to_json())?;
        f.sync_all()?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Cached handle, loading from disk on first use. A session whose lock
    /// was poisoned is dropped and reloaded from its last persisted state.
    fn handle(&self, id: &str) -> Result<Handle> {
        if !valid_session_id(id) {
            return Err(ServiceError::NotFound(id.to_string()));
        }
        let mut map = lock(&self.sessions);
        if let Some(h) = map.get(id) {
            if !h.is_poisoned() {
                return Ok(h.clone());
            }
            map.remove(id);
        }
        let bytes = match fs::read(self.path(id)) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(ServiceError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        let session = Session::from_json(&bytes)?;
        if session.id() != id {
            return Err(ServiceError::Storage(format!("file for {id:?} holds session {:?}", session.id())));
        }
        let h = Arc::new(Mutex::new(session));
        map.insert(id.to_string(), h.clone());
        Ok(h)
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> Result<T>) -> Result<T> {
        let h = self.handle(id)?;
        let s = lock(&h);
        f(&s)
    }

    fn insert_new(&self, session: Session) -> Result<String> {
        let id = session.id().to_string();
        let mut map = lock(&self.sessions);
        if map.contains_key(&id) || self.path(&id).exists() {
            return Err(ServiceError::SessionExists(id));
        }
        self.persist(&session)?;
        map.insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn create(&self, req: CreateRequest) -> Result<String> {
        let id = uuid::Uuid::new_v4().to_string();
        let session = Session::create(id, req.pool, req.config)?;
        let id = self.insert_new(session)?;
        log::info!("created session {id}");
        Ok(id)
    }

    pub fn batch(&self, id: &str) -> Result<BatchView> {
        self.read(id, Session::batch)
    }

    pub fn estimate(&self, id: &str) -> Result<EstimateView> {
        self.read(id, Session::estimate)
    }

    pub fn export(&self, id: &str) -> Result<Vec<u8>> {
        self.read(id, |s| Ok(s.to_json()))
    }

    /// All-or-nothing: a failed write rolls the in-memory session back.
    pub fn submit(&self, id: &str, labels: &[LabelIn]) -> Result<SubmitView> {
        let h = self.handle(id)?;
        let mut s = lock(&h);
        let before = s.snapshot();
        let view = s.submit(labels)?;
        if let Err(e) = self.persist(&s) {
            s.rollback(before)?;
            return Err(e);
        }
        if let Some(i) = view.completed_iteration {
            log::info!("session {id}: iteration {i} complete");
        }
        Ok(view)
    }

    /// Imports an exported session under its own id.
    pub fn import(&self, bytes: &[u8]) -> Result<String> {
        let session = Session::from_json(bytes)?;
        let id = self.insert_new(session)?;
        log::info!("imported session {id}");
        Ok(id)
    }
}
