//! Outbound feedback messages. See `docs/protocol.md` for the wire schema.

use serde::{Deserialize, Serialize};

use palpation_core::assessment::CompetencyReport;
use palpation_core::segmentation::PressEvent;
use palpation_core::telemetry::{
    Cohort, FeedbackColor, ForceQuartet, Orientation, PerSensor, SensorFrame, SessionMeta, TaskKind,
};

/// Envelope for everything pushed to subscribers. `seq` increases by one per
/// message within a session; heartbeats count per connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant_id: Option<String>,
    pub seq: u64,
    #[serde(flatten)]
    pub body: FeedbackBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum FeedbackBody {
    Snapshot(Snapshot),
    PressCompleted(PressEvent),
    TaskStarted(SessionMeta),
    TaskFinalized(TaskFinalized),
    Report(ReportOutcome),
    Heartbeat(Heartbeat),
}

impl FeedbackBody {
    pub fn kind(&self) -> &'static str {
        match self {
            FeedbackBody::Snapshot(_) => "snapshot",
            FeedbackBody::PressCompleted(_) => "press_completed",
            FeedbackBody::TaskStarted(_) => "task_started",
            FeedbackBody::TaskFinalized(_) => "task_finalized",
            FeedbackBody::Report(_) => "report",
            FeedbackBody::Heartbeat(_) => "heartbeat",
        }
    }

    /// Snapshots are superseded by the next one, so a slow subscriber may miss them.
    pub fn droppable(&self) -> bool {
        matches!(self, FeedbackBody::Snapshot(_) | FeedbackBody::Heartbeat(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorReading {
    pub raw: u16,
    pub quartet: ForceQuartet,
    pub color: FeedbackColor,
    /// Presses completed on this sensor so far.
    pub presses: u32,
    pub last_peak: Option<u16>,
}

impl Default for SensorReading {
    fn default() -> Self {
        SensorReading {
            raw: 0,
            quartet: ForceQuartet::Q1,
            color: FeedbackColor::Green,
            presses: 0,
            last_peak: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Timestamp of the newest frame reflected here.
    pub t_ms: u32,
    pub frames: u64,
    pub sensors: PerSensor<SensorReading>,
    pub orientation: Orientation,
    pub orientation_plausible: bool,
    pub codec_errors: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFinalized {
    pub session_id: String,
    pub participant_id: String,
    pub task: TaskKind,
    pub frames: usize,
    pub presses: usize,
    pub duration_ms: u32,
    pub codec_errors: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recording: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskKind>,
}

/// Result of finalizing a participant: a report, or the reason there is none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOutcome {
    pub participant_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<CompetencyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Heartbeat {
    /// Milliseconds since the Unix epoch.
    pub server_time_ms: u64,
}

/// Body of `POST /sessions` and the header line of a TCP ingest connection.
/// Only `session_id` is needed to attach to a session that is already open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenSession {
    pub session_id: String,
    #[serde(default)]
    pub participant_id: Option<String>,
    #[serde(default)]
    pub cohort: Option<Cohort>,
    #[serde(default)]
    pub task: Option<TaskKind>,
    #[serde(default)]
    pub patient_ref: String,
    #[serde(default)]
    pub sample_rate_hz: Option<f64>,
    #[serde(default)]
    pub notes: Option<String>,
    /// TCP only: finalize the task when the connection closes.
    #[serde(default = "yes")]
    pub finalize_on_close: bool,
}

fn yes() -> bool {
    true
}

impl OpenSession {
    pub fn from_meta(meta: &SessionMeta) -> Self {
        OpenSession {
            session_id: meta.session_id.clone(),
            participant_id: Some(meta.participant_id.clone()),
            cohort: Some(meta.cohort),
            task: Some(meta.task),
            patient_ref: meta.patient_ref.clone(),
            sample_rate_hz: Some(meta.sample_rate_hz),
            notes: meta.notes.clone(),
            finalize_on_close: true,
        }
    }

    pub fn to_meta(&self) -> Result<SessionMeta, String> {
        let missing = |field: &str| format!("opening session {:?} needs {field}", self.session_id);
        let participant = self.participant_id.clone().ok_or_else(|| missing("participant_id"))?;
        let cohort = self.cohort.ok_or_else(|| missing("cohort"))?;
        let task = self.task.ok_or_else(|| missing("task"))?;
        let mut meta = SessionMeta::new(self.session_id.clone(), participant, cohort, task);
        meta.patient_ref = self.patient_ref.clone();
        if let Some(hz) = self.sample_rate_hz {
            if !(hz.is_finite() && hz > 0.0) {
                return Err(format!("sample_rate_hz must be positive, got {hz}"));
            }
            meta.sample_rate_hz = hz;
        }
        meta.notes = self.notes.clone();
        Ok(meta)
    }
}

/// Body of a JSON `POST /sessions/{id}/frames`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameBatch {
    pub frames: Vec<SensorFrame>,
}
