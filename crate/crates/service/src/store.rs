//! JSON-file session persistence.
//!
//! Layout below the root: `<id>.json` (the session), `<id>.lock` (held
//! exclusively while a session is modified) and `<id>/` (bundle artifacts).

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use patternforge::graph::GraphEdit;
use patternforge::NfrMap;

use crate::session::{advance_once, edit_graph, AdvanceInput, PipelineSession, BUNDLE_DIR};
use crate::{Engine, ServiceError};

#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

/// Holds the per-session lock until dropped.
struct LockGuard(#[allow(dead_code)] File);

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| ServiceError::io(&root, e))?;
        Ok(SessionStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn checked(&self, id: &str) -> Result<(), ServiceError> {
        // ids double as file names
        uuid::Uuid::parse_str(id).map(|_| ()).map_err(|_| ServiceError::SessionNotFound(id.to_owned()))
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.root.join(format!("{id}.json"))
    }

    pub fn artifact_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn bundle_dir(&self, session: &PipelineSession) -> Option<PathBuf> {
        session.bundle.as_ref().map(|b| self.artifact_dir(&session.id).join(&b.path))
    }

    fn lock(&self, id: &str) -> Result<LockGuard, ServiceError> {
        let path = self.root.join(format!("{id}.lock"));
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(|e| ServiceError::io(&path, e))?;
        file.lock().map_err(|e| ServiceError::io(&path, e))?;
        Ok(LockGuard(file))
    }

    pub fn create(
        &self,
        text: Option<String>,
        threshold: Option<f64>,
        nfr_overrides: NfrMap,
    ) -> Result<PipelineSession, ServiceError> {
        if let Some(t) = threshold {
            if !(0.0..=1.0).contains(&t) {
                return Err(ServiceError::InvalidInput(format!("threshold {t} is outside [0, 1]")));
            }
        }
        let mut session = PipelineSession::new(uuid::Uuid::new_v4().to_string());
        session.text = text;
        session.threshold = threshold;
        session.nfr_overrides = nfr_overrides;
        let _guard = self.lock(&session.id)?;
        self.save(&session)?;
        Ok(session)
    }

    pub fn load(&self, id: &str) -> Result<PipelineSession, ServiceError> {
        self.checked(id)?;
        let path = self.session_path(id);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ServiceError::SessionNotFound(id.to_owned()))
            }
            Err(e) => return Err(ServiceError::io(&path, e)),
        };
        serde_json::from_slice(&bytes).map_err(|e| ServiceError::CorruptSession { path, reason: e.to_string() })
    }

    /// Atomic replace via a temporary file in the same directory.
    fn save(&self, session: &PipelineSession) -> Result<(), ServiceError> {
        let path = self.session_path(&session.id);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root).map_err(|e| ServiceError::io(&self.root, e))?;
        let json = serde_json::to_vec_pretty(session).expect("sessions serialize");
        tmp.write_all(&json).and_then(|_| tmp.as_file().sync_all()).map_err(|e| ServiceError::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| ServiceError::io(&path, e.error))?;
        Ok(())
    }

    /// Runs `advance_once`, persisting after every transition. With
    /// `run_to_pause` it continues (without further input) until a pause state.
    pub fn advance(&self, engine: &Engine, id: &str, input: &AdvanceInput) -> Result<PipelineSession, ServiceError> {
        self.checked(id)?;
        let _guard = self.lock(id)?;
        let artifacts = self.artifact_dir(id);
        fs::create_dir_all(&artifacts).map_err(|e| ServiceError::io(&artifacts, e))?;
        let mut session = self.load(id)?;
        let mut step_input = input.clone();
        loop {
            session = advance_once(&session, &step_input, engine, &artifacts)?;
            self.save(&session)?;
            if !input.run_to_pause || session.state.is_pause() {
                return Ok(session);
            }
            step_input = AdvanceInput::default();
        }
    }

    pub fn edit_graph(
        &self,
        engine: &Engine,
        id: &str,
        subproblem: usize,
        edits: &[GraphEdit],
    ) -> Result<PipelineSession, ServiceError> {
        self.checked(id)?;
        let _guard = self.lock(id)?;
        let session = edit_graph(&self.load(id)?, subproblem, edits, engine)?;
        self.save(&session)?;
        Ok(session)
    }

    /// Tar archive of the session's bundle directory, rooted at `bundle/`.
    pub fn bundle_archive(&self, session: &PipelineSession) -> Result<Vec<u8>, ServiceError> {
        let dir = self.bundle_dir(session).ok_or_else(|| ServiceError::InvalidTransition {
            state: session.state,
            reason: "no bundle has been assembled yet".into(),
        })?;
        let mut builder = tar::Builder::new(Vec::new());
        builder.mode(tar::HeaderMode::Deterministic);
        builder.append_dir_all(BUNDLE_DIR, &dir).map_err(|e| ServiceError::io(&dir, e))?;
        builder.into_inner().map_err(|e| ServiceError::io(&dir, e))
    }
}
