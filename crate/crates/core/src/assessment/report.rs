use serde::{Deserialize, Serialize};

use crate::segmentation::{
    press_stats, segment_frames, sort_events, PressEvent, SegmentationConfig, SegmentationError,
};
use crate::telemetry::{Cohort, PerSensor, SensorId, Session, SessionMeta, TaskKind};

use super::{
    criterion_correct_use, criterion_force_transition, criterion_wrong_use, osce_rating, sensor_contributions,
    AssessmentConfig, ContributionMap, Criterion, CriterionScore, ForceTransitionError, OsceRating,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssessmentError {
    #[error("no session for the {0} task")]
    MissingTask(TaskKind),
    #[error("more than one session for the {0} task")]
    DuplicateTask(TaskKind),
    #[error("{0} session has no presses to assess")]
    EmptySession(TaskKind),
    #[error("session for participant {found:?} mixed into report for {expected:?}")]
    MixedParticipants { expected: String, found: String },
    #[error("segmenting the {task} session: {source}")]
    Segmentation {
        task: TaskKind,
        #[source]
        source: SegmentationError,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl AssessmentError {
    /// Stable machine-readable name.
    pub fn code(&self) -> &'static str {
        match self {
            AssessmentError::MissingTask(_) => "missing_task",
            AssessmentError::DuplicateTask(_) => "duplicate_task",
            AssessmentError::EmptySession(_) => "empty_session",
            AssessmentError::MixedParticipants { .. } => "mixed_participants",
            AssessmentError::Segmentation { .. } => "segmentation",
            AssessmentError::InvalidConfig(_) => "invalid_config",
        }
    }

    /// The task the error is about, if any.
    pub fn task(&self) -> Option<TaskKind> {
        match self {
            AssessmentError::MissingTask(t)
            | AssessmentError::DuplicateTask(t)
            | AssessmentError::EmptySession(t)
            | AssessmentError::Segmentation { task: t, .. } => Some(*t),
            AssessmentError::MixedParticipants { .. } | AssessmentError::InvalidConfig(_) => None,
        }
    }
}

/// Segmented input for one task, as produced live or from a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedTask {
    pub meta: SessionMeta,
    pub frame_count: usize,
    pub duration_ms: u32,
    pub events: Vec<PressEvent>,
}

impl SegmentedTask {
    pub fn from_session(session: &Session, cfg: &SegmentationConfig) -> Result<Self, AssessmentError> {
        let task = session.task();
        if session.frames.is_empty() {
            return Err(AssessmentError::EmptySession(task));
        }
        let events = segment_frames(&session.frames, cfg)
            .map_err(|source| AssessmentError::Segmentation { task, source })?;
        Ok(SegmentedTask {
            meta: session.meta.clone(),
            frame_count: session.frames.len(),
            duration_ms: session.duration_ms(),
            events,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPress {
    pub sensor: SensorId,
    pub onset_ms: u32,
    pub peak_newtons: f64,
}

/// Presses whose calibrated peak exceeded the safe threshold. Advisory only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetySummary {
    pub threshold_newtons: f64,
    pub exceeded: Vec<FlaggedPress>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAssessment {
    pub task: TaskKind,
    pub session_id: String,
    pub frame_count: usize,
    pub duration_ms: u32,
    pub press_counts: PerSensor<u32>,
    pub contributions: ContributionMap,
    /// Every detected press, ordered by onset then sensor.
    pub presses: Vec<PressEvent>,
    pub scores: Vec<CriterionScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety: Option<SafetySummary>,
}

impl TaskAssessment {
    pub fn score(&self, criterion: Criterion) -> Option<&CriterionScore> {
        self.scores.iter().find(|s| s.criterion == criterion)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionAverages {
    pub wrong_use: f64,
    pub correct_use: f64,
    pub force_transition: f64,
}

impl CriterionAverages {
    pub fn get(&self, criterion: Criterion) -> f64 {
        match criterion {
            Criterion::WrongUse => self.wrong_use,
            Criterion::CorrectUse => self.correct_use,
            Criterion::ForceTransition => self.force_transition,
        }
    }
}

/// Configuration the report was computed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub segmentation: SegmentationConfig,
    pub assessment: AssessmentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetencyReport {
    pub schema_version: u32,
    pub engine_version: String,
    pub participant_id: String,
    pub cohort: Cohort,
    /// Superficial, deep, liver.
    pub tasks: Vec<TaskAssessment>,
    pub averages: CriterionAverages,
    pub total: f64,
    pub osce: OsceRating,
    pub config: ReportConfig,
    /// Wire frames rejected while the sessions were streamed in.
    pub codec_errors: u64,
}

impl CompetencyReport {
    pub fn task(&self, task: TaskKind) -> Option<&TaskAssessment> {
        self.tasks.iter().find(|t| t.task == task)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Segment and score one session per task.
pub fn assess(
    sessions: &[Session],
    seg: &SegmentationConfig,
    cfg: &AssessmentConfig,
) -> Result<CompetencyReport, AssessmentError> {
    seg.validate()
        .map_err(|e| AssessmentError::InvalidConfig(e.to_string()))?;
    check_task_set(sessions.iter().map(|s| s.task()))?;
    let tasks = sessions
        .iter()
        .map(|s| SegmentedTask::from_session(s, seg))
        .collect::<Result<Vec<_>, _>>()?;
    assess_segmented(&tasks, seg, cfg, 0)
}

/// Score already-segmented tasks (the live path).
pub fn assess_segmented(
    tasks: &[SegmentedTask],
    seg: &SegmentationConfig,
    cfg: &AssessmentConfig,
    codec_errors: u64,
) -> Result<CompetencyReport, AssessmentError> {
    cfg.validate().map_err(AssessmentError::InvalidConfig)?;
    check_task_set(tasks.iter().map(|t| t.meta.task))?;
    let first = &tasks[0].meta;
    if let Some(other) = tasks.iter().find(|t| t.meta.participant_id != first.participant_id) {
        return Err(AssessmentError::MixedParticipants {
            expected: first.participant_id.clone(),
            found: other.meta.participant_id.clone(),
        });
    }

    let mut assessed = Vec::with_capacity(3);
    for kind in TaskKind::ALL {
        let input = tasks.iter().find(|t| t.meta.task == kind).expect("task set checked");
        assessed.push(assess_task(input, cfg)?);
    }

    let average = |criterion: Criterion| {
        let points: Vec<f64> = assessed
            .iter()
            .filter_map(|t| t.score(criterion))
            .map(|s| s.points)
            .collect();
        points.iter().sum::<f64>() / points.len() as f64
    };
    let averages = CriterionAverages {
        wrong_use: average(Criterion::WrongUse),
        correct_use: average(Criterion::CorrectUse),
        force_transition: average(Criterion::ForceTransition),
    };
    let total = averages.wrong_use + averages.correct_use + averages.force_transition;
    let osce = osce_rating(total, &cfg.osce).map_err(|e| AssessmentError::InvalidConfig(e.to_string()))?;

    Ok(CompetencyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        participant_id: first.participant_id.clone(),
        cohort: first.cohort,
        tasks: assessed,
        averages,
        total,
        osce,
        config: ReportConfig {
            segmentation: *seg,
            assessment: *cfg,
        },
        codec_errors,
    })
}

fn check_task_set(tasks: impl Iterator<Item = TaskKind>) -> Result<(), AssessmentError> {
    let mut seen = [false; 3];
    for t in tasks {
        let slot = &mut seen[t as usize];
        if *slot {
            return Err(AssessmentError::DuplicateTask(t));
        }
        *slot = true;
    }
    match TaskKind::ALL.iter().find(|t| !seen[**t as usize]) {
        Some(&t) => Err(AssessmentError::MissingTask(t)),
        None => Ok(()),
    }
}

fn assess_task(input: &SegmentedTask, cfg: &AssessmentConfig) -> Result<TaskAssessment, AssessmentError> {
    let task = input.meta.task;
    let mut presses = input.events.clone();
    sort_events(&mut presses);
    let stats = press_stats(&presses);
    let contributions = sensor_contributions(&stats).map_err(|_| AssessmentError::EmptySession(task))?;

    let mut scores = vec![
        criterion_wrong_use(&contributions, task, cfg),
        criterion_correct_use(&contributions, task, cfg),
    ];
    match criterion_force_transition(&presses, task) {
        Ok(score) => scores.push(score),
        Err(ForceTransitionError::NotApplicable(_)) => {}
        Err(ForceTransitionError::NoPresses) => return Err(AssessmentError::EmptySession(task)),
    }

    Ok(TaskAssessment {
        task,
        session_id: input.meta.session_id.clone(),
        frame_count: input.frame_count,
        duration_ms: input.duration_ms,
        press_counts: stats.counts,
        contributions,
        presses,
        scores,
        safety: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::{ForceQuartet, QuartetScale};

    fn press(sensor: SensorId, onset_ms: u32, peak_raw: u16) -> PressEvent {
        PressEvent {
            sensor,
            onset_ms,
            release_ms: onset_ms + 300,
            peak_raw,
            peak_quartet: QuartetScale::default().classify(peak_raw),
            duration_ms: 300,
        }
    }

    fn task(kind: TaskKind, presses: &[(SensorId, u16)]) -> SegmentedTask {
        SegmentedTask {
            meta: SessionMeta::new(format!("s-{kind}"), "p1", Cohort::VT, kind),
            frame_count: 100,
            duration_ms: 2000,
            events: presses
                .iter()
                .enumerate()
                .map(|(i, &(s, peak))| press(s, i as u32 * 500, peak))
                .collect(),
        }
    }

    fn balanced(peak: u16) -> Vec<(SensorId, u16)> {
        SensorId::FINGERTIPS.iter().map(|&s| (s, peak)).collect()
    }

    fn ideal() -> Vec<SegmentedTask> {
        vec![
            task(TaskKind::Superficial, &balanced(200)),
            task(TaskKind::Deep, &balanced(500)),
            task(TaskKind::Liver, &[(SensorId::S1, 300), (SensorId::T1, 300), (SensorId::B1, 300)]),
        ]
    }

    fn run(tasks: &[SegmentedTask]) -> Result<CompetencyReport, AssessmentError> {
        assess_segmented(tasks, &SegmentationConfig::default(), &AssessmentConfig::default(), 0)
    }

    #[test]
    fn ideal_triplet_scores_thirty() {
        let r = run(&ideal()).unwrap();
        assert_eq!(r.total, 30.0);
        assert_eq!(r.osce, OsceRating::Excellent);
        assert_eq!(r.tasks.iter().map(|t| t.task).collect::<Vec<_>>(), TaskKind::ALL.to_vec());
        assert_eq!(r.task(TaskKind::Liver).unwrap().scores.len(), 2);
        assert_eq!(r.task(TaskKind::Deep).unwrap().presses[0].peak_quartet, ForceQuartet::Q4);
    }

    #[test]
    fn liver_without_focus_sites_averages_down() {
        let mut tasks = ideal();
        tasks[2] = task(TaskKind::Liver, &[(SensorId::T2, 300), (SensorId::T3, 300)]);
        let r = run(&tasks).unwrap();
        let liver = r.task(TaskKind::Liver).unwrap();
        assert_eq!(liver.score(Criterion::CorrectUse).unwrap().points, 0.0);
        assert!((r.averages.correct_use - 20.0 / 3.0).abs() < 1e-12);
        assert!((r.total - (10.0 + 20.0 / 3.0 + 10.0)).abs() < 1e-12);
    }

    #[test]
    fn task_set_errors() {
        let mut tasks = ideal();
        tasks.pop();
        assert_eq!(run(&tasks), Err(AssessmentError::MissingTask(TaskKind::Liver)));
        let mut tasks = ideal();
        tasks.push(tasks[0].clone());
        assert_eq!(run(&tasks), Err(AssessmentError::DuplicateTask(TaskKind::Superficial)));
        let mut tasks = ideal();
        tasks[1].events.clear();
        assert_eq!(run(&tasks), Err(AssessmentError::EmptySession(TaskKind::Deep)));
        let mut tasks = ideal();
        tasks[0].events = vec![press(SensorId::E1, 0, 100)];
        assert_eq!(run(&tasks), Err(AssessmentError::EmptySession(TaskKind::Superficial)));
        let mut tasks = ideal();
        tasks[2].meta.participant_id = "p2".into();
        assert!(matches!(run(&tasks), Err(AssessmentError::MixedParticipants { .. })));
    }

    #[test]
    fn report_json_is_deterministic() {
        let a = run(&ideal()).unwrap().to_json();
        let mut shuffled = ideal();
        shuffled.reverse();
        shuffled[0].events.reverse();
        let b = run(&shuffled).unwrap().to_json();
        assert_eq!(a, b);
        let back: CompetencyReport = serde_json::from_str(&a).unwrap();
        assert_eq!(back.to_json(), a);
    }
}
