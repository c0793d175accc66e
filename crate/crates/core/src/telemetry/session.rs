use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::frame::SensorFrame;

/// Nominal glove sample rate. Processing trusts timestamps, not this value.
pub const NOMINAL_SAMPLE_RATE_HZ: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Superficial,
    Deep,
    Liver,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Superficial, TaskKind::Deep, TaskKind::Liver];

    /// The force-transition criterion only grades superficial and deep palpation.
    pub fn has_force_transition(self) -> bool {
        !matches!(self, TaskKind::Liver)
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Superficial => "superficial",
            TaskKind::Deep => "deep",
            TaskKind::Liver => "liver",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown task {0:?} (expected superficial, deep or liver)")]
pub struct UnknownTask(pub String);

impl FromStr for TaskKind {
    type Err = UnknownTask;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "superficial" => Ok(TaskKind::Superficial),
            "deep" => Ok(TaskKind::Deep),
            "liver" | "liver-edge" => Ok(TaskKind::Liver),
            _ => Err(UnknownTask(s.to_string())),
        }
    }
}

/// Study cohort: conventionally, semi-visually and visually trained students, or an expert tutor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Cohort {
    CT,
    SVT,
    VT,
    Expert,
}

impl FromStr for Cohort {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CT" => Ok(Cohort::CT),
            "SVT" => Ok(Cohort::SVT),
            "VT" => Ok(Cohort::VT),
            "EXPERT" => Ok(Cohort::Expert),
            _ => Err(format!("unknown cohort {s:?}")),
        }
    }
}

/// Everything about a session except its frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub participant_id: String,
    pub cohort: Cohort,
    pub task: TaskKind,
    pub patient_ref: String,
    pub sample_rate_hz: f64,
    /// Free-form annotation, e.g. the expert's seniority.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl SessionMeta {
    pub fn new(
        session_id: impl Into<String>,
        participant_id: impl Into<String>,
        cohort: Cohort,
        task: TaskKind,
    ) -> Self {
        SessionMeta {
            session_id: session_id.into(),
            participant_id: participant_id.into(),
            cohort,
            task,
            patient_ref: String::new(),
            sample_rate_hz: NOMINAL_SAMPLE_RATE_HZ,
            notes: None,
        }
    }
}

/// A recorded palpation task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub meta: SessionMeta,
    pub frames: Vec<SensorFrame>,
}

impl Session {
    pub fn new(meta: SessionMeta) -> Self {
        Session {
            meta,
            frames: Vec::new(),
        }
    }

    pub fn task(&self) -> TaskKind {
        self.meta.task
    }

    pub fn duration_ms(&self) -> u32 {
        match (self.frames.first(), self.frames.last()) {
            (Some(a), Some(b)) => b.timestamp_ms.saturating_sub(a.timestamp_ms),
            _ => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_liver_skips_force_transition() {
        assert!(TaskKind::Superficial.has_force_transition());
        assert!(TaskKind::Deep.has_force_transition());
        assert!(!TaskKind::Liver.has_force_transition());
    }

    #[test]
    fn parse_task_and_cohort() {
        assert_eq!("Deep".parse::<TaskKind>().unwrap(), TaskKind::Deep);
        assert_eq!("liver-edge".parse::<TaskKind>().unwrap(), TaskKind::Liver);
        assert!("kidney".parse::<TaskKind>().is_err());
        assert_eq!("svt".parse::<Cohort>().unwrap(), Cohort::SVT);
    }
}
