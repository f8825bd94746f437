use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::RwLock;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::gate::SubmissionReport;
use crate::ranking::RankedResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmissionState {
    Received,
    Checking,
    Rejected,
    Predicting,
    Done,
    Failed,
}

impl SubmissionState {
    pub fn is_terminal(self) -> bool {
        matches!(self, SubmissionState::Rejected | SubmissionState::Done | SubmissionState::Failed)
    }

    /// received → checking → (rejected | predicting) → (done | failed), plus
    /// failure from any non-terminal state.
    pub fn can_become(self, next: SubmissionState) -> bool {
        use SubmissionState::*;
        matches!(
            (self, next),
            (Received, Checking)
                | (Checking, Rejected)
                | (Checking, Predicting)
                | (Predicting, Done)
                | (Received | Checking | Predicting, Failed)
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SubmissionState::Received => "received",
            SubmissionState::Checking => "checking",
            SubmissionState::Rejected => "rejected",
            SubmissionState::Predicting => "predicting",
            SubmissionState::Done => "done",
            SubmissionState::Failed => "failed",
        }
    }
}

pub(crate) fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Submission {
    pub id: String,
    pub state: SubmissionState,
    pub created_at: f64,
    pub updated_at: f64,
    pub input_duration_s: Option<f64>,
    pub trim: Option<(f64, f64)>,
    pub report: Option<SubmissionReport>,
    /// Predicted recognition time from the latency model, set on entering
    /// `predicting`.
    pub predicted_total_s: Option<f64>,
    pub predicting_since: Option<f64>,
    /// Wall time the recognition took, set on `done`.
    pub elapsed_s: Option<f64>,
    pub results: Option<Vec<RankedResult>>,
    pub media_retained: bool,
    pub media_purged_at: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    predicting_clock: Option<Instant>,
}

impl Submission {
    pub fn new(id: String, media_retained: bool, trim: Option<(f64, f64)>) -> Self {
        let now = unix_now();
        Self {
            id,
            state: SubmissionState::Received,
            created_at: now,
            updated_at: now,
            input_duration_s: None,
            trim,
            report: None,
            predicted_total_s: None,
            predicting_since: None,
            elapsed_s: None,
            results: None,
            media_retained,
            media_purged_at: None,
            error: None,
            predicting_clock: None,
        }
    }

    /// Seconds spent predicting so far, from a monotonic clock when the
    /// record lives in this process.
    pub fn predicting_elapsed(&self) -> f64 {
        if let Some(e) = self.elapsed_s {
            return e;
        }
        match (self.predicting_clock, self.predicting_since) {
            (Some(c), _) => c.elapsed().as_secs_f64(),
            (None, Some(t)) => (unix_now() - t).max(0.0),
            _ => 0.0,
        }
    }

    pub(crate) fn start_predicting(&mut self, predicted_total_s: f64) {
        self.predicted_total_s = Some(predicted_total_s);
        self.predicting_since = Some(unix_now());
        self.predicting_clock = Some(Instant::now());
    }
}

/// `min(elapsed / predicted, 0.99)` while predicting, 1 when done, 0 before
/// prediction starts. Rejected and failed submissions keep the value they
/// had, so polled progress never decreases.
pub fn progress(state: SubmissionState, elapsed_s: f64, predicted_total_s: Option<f64>) -> f64 {
    let running = || match predicted_total_s {
        Some(t) if t > 0.0 => (elapsed_s / t).clamp(0.0, 0.99),
        _ => 0.0,
    };
    match state {
        SubmissionState::Received | SubmissionState::Checking | SubmissionState::Rejected => 0.0,
        SubmissionState::Predicting | SubmissionState::Failed => running(),
        SubmissionState::Done => 1.0,
    }
}

/// `max(predicted - elapsed, 0)`, and 0 once terminal.
pub fn eta(state: SubmissionState, elapsed_s: f64, predicted_total_s: Option<f64>) -> f64 {
    if state.is_terminal() {
        return 0.0;
    }
    predicted_total_s.map_or(0.0, |t| (t - elapsed_s).max(0.0))
}

/// Submission records as `<id>.json`, raw uploads as `<id>.media` and
/// extracted pose tracks as `<id>.pose`, all in one directory. Records are
/// also cached in memory; the pipeline is the only writer per id.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    records: RwLock<HashMap<String, Submission>>,
}

pub const MEDIA_EXT: &str = "media";
pub const POSE_EXT: &str = "pose";

impl Store {
    /// Opens or creates `dir`. Records left non-terminal by a previous process
    /// are marked failed, and their media is removed unless retained.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let store = Self { dir, records: RwLock::new(HashMap::new()) };
        let mut loaded = HashMap::new();
        for entry in std::fs::read_dir(&store.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let mut rec: Submission = serde_json::from_slice(&std::fs::read(&path)?)
                    .map_err(|e| ServiceError::Storage(format!("{}: {e}", path.display())))?;
                if !rec.state.is_terminal() {
                    rec.state = SubmissionState::Failed;
                    rec.error = Some("interrupted by a service restart".into());
                    rec.updated_at = unix_now();
                    store.write_record(&rec)?;
                }
                if !rec.media_retained {
                    store.remove_media(&rec.id)?;
                }
                loaded.insert(rec.id.clone(), rec);
            }
        }
        *store.records.write().expect("lock") = loaded;
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{id}.{ext}"))
    }

    pub fn media_path(&self, id: &str) -> PathBuf {
        self.path(id, MEDIA_EXT)
    }

    pub fn pose_path(&self, id: &str) -> PathBuf {
        self.path(id, POSE_EXT)
    }

    fn write_record(&self, rec: &Submission) -> Result<(), ServiceError> {
        let tmp = self.path(&rec.id, "json.tmp");
        let json = serde_json::to_vec_pretty(rec).map_err(|e| ServiceError::Storage(e.to_string()))?;
        std::fs::write(&tmp, json)?;
        std::fs::rename(&tmp, self.path(&rec.id, "json"))?;
        Ok(())
    }

    pub fn insert(&self, rec: Submission, media: &[u8]) -> Result<(), ServiceError> {
        std::fs::write(self.media_path(&rec.id), media)?;
        self.write_record(&rec)?;
        self.records.write().expect("lock").insert(rec.id.clone(), rec);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<Submission> {
        self.records.read().expect("lock").get(id).cloned()
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies `f` and persists the result.
    pub fn update(&self, id: &str, f: impl FnOnce(&mut Submission)) -> Result<Submission, ServiceError> {
        let mut records = self.records.write().expect("lock");
        let rec = records.get_mut(id).ok_or_else(|| ServiceError::NotFound(id.to_string()))?;
        let mut next = rec.clone();
        f(&mut next);
        next.updated_at = unix_now();
        self.write_record(&next)?;
        *rec = next.clone();
        Ok(next)
    }

    /// Moves to `next`, refusing transitions outside the state machine.
    pub fn transition(
        &self,
        id: &str,
        next: SubmissionState,
        f: impl FnOnce(&mut Submission),
    ) -> Result<Submission, ServiceError> {
        let mut illegal = None;
        let rec = self.update(id, |r| {
            if r.state.can_become(next) {
                r.state = next;
                f(r);
            } else {
                illegal = Some(r.state);
            }
        })?;
        match illegal {
            Some(from) => Err(ServiceError::Transition { from, to: next }),
            None => Ok(rec),
        }
    }

    pub fn read_media(&self, id: &str) -> Result<Vec<u8>, ServiceError> {
        Ok(std::fs::read(self.media_path(id))?)
    }

    /// Idempotent.
    pub fn remove_media(&self, id: &str) -> Result<(), ServiceError> {
        match std::fs::remove_file(self.media_path(id)) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }

    pub fn media_files(&self) -> Result<Vec<PathBuf>, ServiceError> {
        let mut out = Vec::new();
        for entry in std::fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == MEDIA_EXT) {
                out.push(path);
            }
        }
        Ok(out)
    }
}
