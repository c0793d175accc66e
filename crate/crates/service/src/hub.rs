//! Shared service state: open sessions, finished tasks, reports and subscribers.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;

use palpation_core::assessment::{assess_segmented, AssessmentError, CompetencyReport, SegmentedTask};
use palpation_core::reference::{annotate_report, ReferenceModel};
use palpation_core::telemetry::{SensorFrame, SessionMeta, TaskKind};
use palpation_core::wire::{write_session_file, SESSION_FILE_EXTENSION};

use crate::live::{FinishedSession, LiveSession};
use crate::messages::{ErrorBody, FeedbackBody, FeedbackMessage, ReportOutcome, Snapshot, TaskFinalized};
use crate::settings::ServiceConfig;

/// Queue depth per subscriber before snapshots start being dropped.
pub const SUBSCRIBER_CAPACITY: usize = 256;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServiceError {
    #[error("session {0:?} already exists")]
    DuplicateSession(String),
    #[error("no session {0:?}")]
    UnknownSession(String),
    #[error("session {0:?} is already finalized")]
    SessionClosed(String),
    #[error("no sessions for participant {0:?}")]
    UnknownParticipant(String),
    #[error("no report for participant {0:?}")]
    NoReport(String),
    #[error("assessing participant {participant:?}: {source}")]
    Assessment {
        participant: String,
        source: AssessmentError,
    },
    #[error("{0}")]
    BadRequest(String),
    #[error("storage: {0}")]
    Storage(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::DuplicateSession(_) => "duplicate_session",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::SessionClosed(_) => "session_closed",
            ServiceError::UnknownParticipant(_) => "unknown_participant",
            ServiceError::NoReport(_) => "no_report",
            ServiceError::Assessment { source, .. } => source.code(),
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Storage(_) => "storage",
        }
    }

    pub fn body(&self) -> ErrorBody {
        let task = match self {
            ServiceError::Assessment { source, .. } => source.task(),
            _ => None,
        };
        ErrorBody {
            code: self.code().to_string(),
            message: self.to_string(),
            task,
        }
    }
}

/// Ids become file names, so keep them to a safe alphabet.
pub fn validate_id(kind: &str, id: &str) -> Result<(), ServiceError> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-'));
    if ok {
        Ok(())
    } else {
        Err(ServiceError::BadRequest(format!(
            "{kind} {id:?} must be 1-128 characters of [A-Za-z0-9._-] and not start with '.'"
        )))
    }
}

/// Which messages a subscriber wants. Empty filter means everything.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct SubscriptionFilter {
    pub session: Option<String>,
    pub participant: Option<String>,
}

impl SubscriptionFilter {
    fn matches(&self, msg: &FeedbackMessage) -> bool {
        let session_ok = self.session.as_ref().is_none_or(|s| msg.session_id.as_ref() == Some(s));
        let participant_ok = self
            .participant
            .as_ref()
            .is_none_or(|p| msg.participant_id.as_ref() == Some(p));
        session_ok && participant_ok
    }
}

pub struct Subscription {
    pub id: u64,
    pub rx: mpsc::Receiver<Arc<str>>,
}

struct Subscriber {
    id: u64,
    filter: SubscriptionFilter,
    tx: mpsc::Sender<Arc<str>>,
    dropped: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Open,
    Finalized,
    /// Included in a successful report.
    Assessed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub meta: SessionMeta,
    pub state: SessionState,
    pub frames: usize,
    pub presses: usize,
    pub codec_errors: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    /// Frames accepted by this call.
    pub accepted: usize,
    /// Frames recorded so far in the session.
    pub frames: usize,
    pub presses: usize,
    pub codec_errors: u64,
}

struct FinishedTask {
    task: SegmentedTask,
    codec_errors: u64,
    assessed: bool,
}

#[derive(Default)]
struct Inner {
    open: BTreeMap<String, LiveSession>,
    finished: BTreeMap<String, FinishedTask>,
    reports: HashMap<String, CompetencyReport>,
    seqs: HashMap<String, u64>,
    subscribers: Vec<Subscriber>,
    next_subscriber: u64,
}

impl Inner {
    fn next_seq(&mut self, key: String) -> u64 {
        let seq = self.seqs.entry(key).or_insert(0);
        let this = *seq;
        *seq += 1;
        this
    }

    fn publish_session(&mut self, meta: &SessionMeta, body: FeedbackBody) {
        let seq = self.next_seq(format!("s:{}", meta.session_id));
        self.publish(FeedbackMessage {
            session_id: Some(meta.session_id.clone()),
            participant_id: Some(meta.participant_id.clone()),
            seq,
            body,
        });
    }

    fn publish(&mut self, msg: FeedbackMessage) {
        if self.subscribers.is_empty() {
            return;
        }
        let text: Arc<str> = serde_json::to_string(&msg).expect("message serializes").into();
        let droppable = msg.body.droppable();
        self.subscribers.retain_mut(|sub| {
            if !sub.filter.matches(&msg) {
                return !sub.tx.is_closed();
            }
            match sub.tx.try_send(text.clone()) {
                Ok(()) => true,
                Err(mpsc::error::TrySendError::Full(_)) if droppable => {
                    sub.dropped += 1;
                    true
                }
                Err(mpsc::error::TrySendError::Full(_)) => {
                    tracing::warn!(subscriber = sub.id, dropped = sub.dropped, "subscriber too slow, disconnecting");
                    false
                }
                Err(mpsc::error::TrySendError::Closed(_)) => false,
            }
        });
    }
}

/// Thread-safe service core, shared by the HTTP, WebSocket and TCP front ends.
pub struct Hub {
    cfg: ServiceConfig,
    inner: Mutex<Inner>,
}

impl Hub {
    pub fn new(cfg: ServiceConfig) -> Result<Self, ServiceError> {
        cfg.segmentation
            .validate()
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        cfg.assessment.validate().map_err(ServiceError::BadRequest)?;
        Ok(Hub {
            cfg,
            inner: Mutex::new(Inner::default()),
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    pub fn reference(&self) -> Option<&ReferenceModel> {
        self.cfg.reference.as_ref()
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn subscribe(&self, filter: SubscriptionFilter) -> Subscription {
        let (tx, rx) = mpsc::channel(SUBSCRIBER_CAPACITY);
        let mut inner = self.lock();
        let id = inner.next_subscriber;
        inner.next_subscriber += 1;
        inner.subscribers.push(Subscriber {
            id,
            filter,
            tx,
            dropped: 0,
        });
        Subscription { id, rx }
    }

    pub fn subscriber_count(&self) -> usize {
        let mut inner = self.lock();
        inner.subscribers.retain(|s| !s.tx.is_closed());
        inner.subscribers.len()
    }

    pub fn open_session(&self, meta: SessionMeta) -> Result<(), ServiceError> {
        validate_id("session id", &meta.session_id)?;
        validate_id("participant id", &meta.participant_id)?;
        let live = LiveSession::new(meta.clone(), self.cfg.segmentation).map_err(ServiceError::BadRequest)?;
        let mut inner = self.lock();
        let id = &meta.session_id;
        if inner.open.contains_key(id) || inner.finished.contains_key(id) {
            return Err(ServiceError::DuplicateSession(id.clone()));
        }
        inner.open.insert(id.clone(), live);
        inner.publish_session(&meta, FeedbackBody::TaskStarted(meta.clone()));
        tracing::info!(session = %id, task = %meta.task, "session opened");
        Ok(())
    }

    pub fn is_open(&self, session_id: &str) -> bool {
        self.lock().open.contains_key(session_id)
    }

    pub fn ingest_bytes(&self, session_id: &str, bytes: &[u8]) -> Result<IngestSummary, ServiceError> {
        self.with_live(session_id, |live| live.ingest_bytes(bytes))
    }

    pub fn ingest_frames(&self, session_id: &str, frames: Vec<SensorFrame>) -> Result<IngestSummary, ServiceError> {
        self.with_live(session_id, |live| {
            frames.into_iter().flat_map(|f| live.ingest_frame(f)).collect()
        })
    }

    fn with_live(
        &self,
        session_id: &str,
        f: impl FnOnce(&mut LiveSession) -> Vec<FeedbackBody>,
    ) -> Result<IngestSummary, ServiceError> {
        let mut inner = self.lock();
        let Some(live) = inner.open.get_mut(session_id) else {
            return Err(self.missing(&inner, session_id));
        };
        let before = live.frame_count();
        let out = f(live);
        let meta = live.meta().clone();
        let summary = IngestSummary {
            accepted: live.frame_count() - before,
            frames: live.frame_count(),
            presses: live.press_count(),
            codec_errors: live.codec_errors(),
        };
        for body in out {
            inner.publish_session(&meta, body);
        }
        Ok(summary)
    }

    fn missing(&self, inner: &Inner, session_id: &str) -> ServiceError {
        if inner.finished.contains_key(session_id) {
            ServiceError::SessionClosed(session_id.to_string())
        } else {
            ServiceError::UnknownSession(session_id.to_string())
        }
    }

    /// Current live state of an open session.
    pub fn snapshot(&self, session_id: &str) -> Result<Snapshot, ServiceError> {
        let inner = self.lock();
        match inner.open.get(session_id) {
            Some(live) => Ok(live.snapshot()),
            None => Err(self.missing(&inner, session_id)),
        }
    }

    /// Close a session, flush pending presses and persist the recording.
    pub fn finalize_task(&self, session_id: &str) -> Result<TaskFinalized, ServiceError> {
        let live = {
            let mut inner = self.lock();
            match inner.open.remove(session_id) {
                Some(live) => live,
                None => return Err(self.missing(&inner, session_id)),
            }
        };
        let (done, flushed) = live.finish();
        // Disk I/O happens outside the lock so other sessions keep streaming.
        let recording = self.persist_session(&done);
        let meta = done.session.meta.clone();
        let info = TaskFinalized {
            session_id: meta.session_id.clone(),
            participant_id: meta.participant_id.clone(),
            task: meta.task,
            frames: done.session.frames.len(),
            presses: done.events.len(),
            duration_ms: done.session.duration_ms(),
            codec_errors: done.codec_errors,
            recording: recording.map(|p| p.display().to_string()),
        };
        let mut inner = self.lock();
        for body in flushed {
            inner.publish_session(&meta, body);
        }
        inner.finished.insert(
            meta.session_id.clone(),
            FinishedTask {
                task: SegmentedTask {
                    meta: meta.clone(),
                    frame_count: info.frames,
                    duration_ms: info.duration_ms,
                    events: done.events,
                },
                codec_errors: done.codec_errors,
                assessed: false,
            },
        );
        inner.publish_session(&meta, FeedbackBody::TaskFinalized(info.clone()));
        tracing::info!(session = %meta.session_id, frames = info.frames, presses = info.presses, "session finalized");
        Ok(info)
    }

    fn persist_session(&self, done: &FinishedSession) -> Option<PathBuf> {
        let dir = self.cfg.data_dir.as_ref()?.join("sessions");
        let path = dir.join(format!("{}.{SESSION_FILE_EXTENSION}", done.session.meta.session_id));
        let result = std::fs::create_dir_all(&dir)
            .map_err(|e| e.to_string())
            .and_then(|()| write_session_file(&done.session, &path).map_err(|e| e.to_string()));
        match result {
            Ok(()) => Some(path),
            Err(e) => {
                tracing::error!(path = %path.display(), error = %e, "could not write session recording");
                None
            }
        }
    }

    /// Finalize any open sessions of the participant, then assess every
    /// finished, not yet assessed task. The outcome is broadcast either way.
    pub fn finalize_participant(&self, participant_id: &str) -> Result<CompetencyReport, ServiceError> {
        validate_id("participant id", participant_id)?;
        let open: Vec<String> = {
            let inner = self.lock();
            inner
                .open
                .iter()
                .filter(|(_, l)| l.meta().participant_id == participant_id)
                .map(|(id, _)| id.clone())
                .collect()
        };
        for id in open {
            // A concurrent finalize may have won the race; that is fine.
            match self.finalize_task(&id) {
                Ok(_) | Err(ServiceError::SessionClosed(_)) => {}
                Err(e) => return Err(e),
            }
        }

        let (tasks, codec_errors): (Vec<SegmentedTask>, u64) = {
            let inner = self.lock();
            let pending: Vec<&FinishedTask> = inner
                .finished
                .values()
                .filter(|f| f.task.meta.participant_id == participant_id && !f.assessed)
                .collect();
            if pending.is_empty() && !inner.finished.values().any(|f| f.task.meta.participant_id == participant_id) {
                return Err(ServiceError::UnknownParticipant(participant_id.to_string()));
            }
            (
                pending.iter().map(|f| f.task.clone()).collect(),
                pending.iter().map(|f| f.codec_errors).sum(),
            )
        };

        let result = self.assess(participant_id, &tasks, codec_errors);
        if let Ok(report) = &result {
            self.persist_report(report);
        }
        let mut inner = self.lock();
        let outcome = match &result {
            Ok(report) => {
                for t in &tasks {
                    if let Some(f) = inner.finished.get_mut(&t.meta.session_id) {
                        f.assessed = true;
                    }
                }
                inner.reports.insert(participant_id.to_string(), report.clone());
                ReportOutcome {
                    participant_id: participant_id.to_string(),
                    report: Some(report.clone()),
                    error: None,
                }
            }
            Err(e) => ReportOutcome {
                participant_id: participant_id.to_string(),
                report: None,
                error: Some(e.body()),
            },
        };
        let seq = inner.next_seq(format!("p:{participant_id}"));
        inner.publish(FeedbackMessage {
            session_id: None,
            participant_id: Some(participant_id.to_string()),
            seq,
            body: FeedbackBody::Report(outcome),
        });
        result
    }

    fn assess(&self, participant_id: &str, tasks: &[SegmentedTask], codec_errors: u64) -> Result<CompetencyReport, ServiceError> {
        let wrap = |source| ServiceError::Assessment {
            participant: participant_id.to_string(),
            source,
        };
        // A recording with no frames gets the same error as in batch mode.
        if let Some(t) = tasks.iter().find(|t| t.frame_count == 0) {
            return Err(wrap(AssessmentError::EmptySession(t.meta.task)));
        }
        if tasks.is_empty() {
            return Err(wrap(AssessmentError::MissingTask(TaskKind::Superficial)));
        }
        let mut report =
            assess_segmented(tasks, &self.cfg.segmentation, &self.cfg.assessment, codec_errors).map_err(wrap)?;
        if let Some(table) = &self.cfg.calibration {
            annotate_report(&mut report, table, self.cfg.effective_threshold());
        }
        Ok(report)
    }

    fn persist_report(&self, report: &CompetencyReport) {
        let Some(root) = &self.cfg.data_dir else { return };
        let dir = root.join("reports");
        let path = dir.join(format!("{}.json", report.participant_id));
        if let Err(e) = std::fs::create_dir_all(&dir).and_then(|()| std::fs::write(&path, report.to_json())) {
            tracing::error!(path = %path.display(), error = %e, "could not write report");
        }
    }

    pub fn report(&self, participant_id: &str) -> Result<CompetencyReport, ServiceError> {
        self.lock()
            .reports
            .get(participant_id)
            .cloned()
            .ok_or_else(|| ServiceError::NoReport(participant_id.to_string()))
    }

    pub fn sessions(&self) -> Vec<SessionInfo> {
        let inner = self.lock();
        let open = inner.open.values().map(|l| SessionInfo {
            meta: l.meta().clone(),
            state: SessionState::Open,
            frames: l.frame_count(),
            presses: l.press_count(),
            codec_errors: l.codec_errors(),
        });
        let finished = inner.finished.values().map(|f| SessionInfo {
            meta: f.task.meta.clone(),
            state: if f.assessed { SessionState::Assessed } else { SessionState::Finalized },
            frames: f.task.frame_count,
            presses: f.task.events.len(),
            codec_errors: f.codec_errors,
        });
        let mut all: Vec<SessionInfo> = open.chain(finished).collect();
        all.sort_by(|a, b| a.meta.session_id.cmp(&b.meta.session_id));
        all
    }
}
