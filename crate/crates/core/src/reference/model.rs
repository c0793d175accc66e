use serde::{Deserialize, Serialize};

use crate::assessment::{CompetencyReport, FlaggedPress, SafetySummary};
use crate::segmentation::{segment_frames, PressEvent, SegmentationConfig, SegmentationError};
use crate::telemetry::{PerSensor, SensorId, Session, TaskKind, DEFAULT_QUARTET_BOUND};

use super::{calibrate, CalibrationTable};

pub const REFERENCE_SCHEMA_VERSION: u32 = 1;

/// Highest safe force for a small-female patient.
pub const SAFE_THRESHOLD_NEWTONS: f64 = 1.65;
/// Expert index-fingertip mean force, superficial palpation.
pub const SUPERFICIAL_INDEX_MEAN_NEWTONS: f64 = 1.25;
/// Expert index-fingertip mean force, deep palpation.
pub const DEEP_INDEX_MEAN_NEWTONS: f64 = 2.37;

/// Observed quartet bounds are rounded up to this step.
const BOUND_STEP: u16 = 50;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReferenceError {
    #[error("no expert sessions for the {0} task")]
    NoExpertData(TaskKind),
    #[error("invalid reference configuration: {0}")]
    InvalidConfig(String),
    #[error("reference model schema version {found}, expected {expected}")]
    SchemaVersion { found: u32, expected: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    /// Replace the default quartet bound with the one observed in deep sessions.
    pub derive_quartet_bound: bool,
    pub safe_threshold_newtons: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig {
            derive_quartet_bound: false,
            safe_threshold_newtons: SAFE_THRESHOLD_NEWTONS,
        }
    }
}

/// An expert recording with its detected presses.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertSession {
    pub session: Session,
    pub events: Vec<PressEvent>,
}

impl ExpertSession {
    pub fn segment(session: Session, cfg: &SegmentationConfig) -> Result<Self, SegmentationError> {
        let events = segment_frames(&session.frames, cfg)?;
        Ok(ExpertSession { session, events })
    }
}

/// Which reading of "mean force" a figure came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanInterpretation {
    /// Mean of per-press peak forces.
    PressPeak,
    /// Mean of every sample taken while all three fingertips were engaged.
    EngagedSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublishedMeans {
    pub superficial_index_newtons: f64,
    pub deep_index_newtons: f64,
}

impl Default for PublishedMeans {
    fn default() -> Self {
        PublishedMeans {
            superficial_index_newtons: SUPERFICIAL_INDEX_MEAN_NEWTONS,
            deep_index_newtons: DEEP_INDEX_MEAN_NEWTONS,
        }
    }
}

/// Index-fingertip (T1) force under both interpretations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IndexFingertipMeans {
    pub press_peak_raw: Option<f64>,
    pub engaged_sample_raw: Option<f64>,
    pub press_peak_newtons: Option<f64>,
    pub engaged_sample_newtons: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReference {
    pub task: TaskKind,
    pub session_count: usize,
    /// Mean per-press peak, averaged within each session then across sessions.
    /// `None` for sensors no expert pressed.
    pub mean_peak_raw: PerSensor<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_peak_newtons: Option<PerSensor<Option<f64>>>,
    pub press_count_min: u32,
    pub press_count_max: u32,
    pub mean_press_count: f64,
    pub max_peak_raw: u16,
    pub index_fingertip: IndexFingertipMeans,
}

/// Averaged expert performance plus published force constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceModel {
    pub schema_version: u32,
    pub session_count: usize,
    /// Superficial, deep, liver.
    pub tasks: Vec<TaskReference>,
    pub quartet_bound: u16,
    /// Largest deep-task peak rounded up to a multiple of 50.
    pub observed_quartet_bound: Option<u16>,
    pub safe_threshold_newtons: f64,
    pub published: PublishedMeans,
    /// Interpretation behind the Newton figures used in reports.
    pub report_interpretation: MeanInterpretation,
    pub calibrated: bool,
}

impl ReferenceModel {
    pub fn task(&self, task: TaskKind) -> Option<&TaskReference> {
        self.tasks.iter().find(|t| t.task == task)
    }

    pub fn validate(&self) -> Result<(), ReferenceError> {
        if self.schema_version != REFERENCE_SCHEMA_VERSION {
            return Err(ReferenceError::SchemaVersion {
                found: self.schema_version,
                expected: REFERENCE_SCHEMA_VERSION,
            });
        }
        if self.session_count == 0 {
            return Err(ReferenceError::InvalidConfig("model built from zero sessions".into()));
        }
        check_safe_threshold(self.safe_threshold_newtons, &self.published)?;
        let finite = |v: &Option<f64>| v.is_none_or(f64::is_finite);
        for t in &self.tasks {
            if !t.mean_peak_raw.values().iter().all(finite) {
                return Err(ReferenceError::InvalidConfig(format!("non-finite mean in {} task", t.task)));
            }
        }
        Ok(())
    }
}

fn check_safe_threshold(threshold: f64, published: &PublishedMeans) -> Result<(), ReferenceError> {
    if !(threshold.is_finite() && threshold > 0.0 && threshold <= published.deep_index_newtons) {
        return Err(ReferenceError::InvalidConfig(format!(
            "safe threshold {threshold} N must be positive and at most the deep mean {} N",
            published.deep_index_newtons
        )));
    }
    Ok(())
}

/// Order-independent mean: values are sorted, then averaged as offsets from
/// the smallest so identical inputs return themselves exactly.
fn stable_mean(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let base = values[0];
    let offset: f64 = values.iter().map(|v| v - base).sum();
    Some(base + offset / values.len() as f64)
}

fn session_mean<T: Copy>(items: impl Iterator<Item = T>, value: impl Fn(T) -> f64) -> Option<f64> {
    let mut v: Vec<f64> = items.map(value).collect();
    stable_mean(&mut v)
}

/// Mean of session means, skipping sessions where the quantity is undefined.
fn across_sessions(per_session: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut v: Vec<f64> = per_session.flatten().collect();
    stable_mean(&mut v)
}

fn round_up_to_step(v: u16) -> u16 {
    v.div_ceil(BOUND_STEP).saturating_mul(BOUND_STEP)
}

/// Average expert sessions into the best-practice model.
pub fn build_reference(
    experts: &[ExpertSession],
    seg: &SegmentationConfig,
    cfg: &ReferenceConfig,
    calibration: Option<&CalibrationTable>,
) -> Result<ReferenceModel, ReferenceError> {
    let published = PublishedMeans::default();
    check_safe_threshold(cfg.safe_threshold_newtons, &published)?;

    let mut tasks = Vec::with_capacity(3);
    for kind in TaskKind::ALL {
        let group: Vec<&ExpertSession> = experts.iter().filter(|e| e.session.task() == kind).collect();
        if group.is_empty() {
            return Err(ReferenceError::NoExpertData(kind));
        }
        tasks.push(task_reference(kind, &group, seg, calibration));
    }

    let deep_max = tasks[1].max_peak_raw;
    let observed = (deep_max > 0).then(|| round_up_to_step(deep_max));
    let quartet_bound = match observed {
        Some(b) if cfg.derive_quartet_bound => b,
        _ => DEFAULT_QUARTET_BOUND,
    };

    let model = ReferenceModel {
        schema_version: REFERENCE_SCHEMA_VERSION,
        session_count: experts.len(),
        tasks,
        quartet_bound,
        observed_quartet_bound: observed,
        safe_threshold_newtons: cfg.safe_threshold_newtons,
        published,
        report_interpretation: MeanInterpretation::PressPeak,
        calibrated: calibration.is_some(),
    };
    model.validate()?;
    Ok(model)
}

fn task_reference(
    task: TaskKind,
    group: &[&ExpertSession],
    seg: &SegmentationConfig,
    calibration: Option<&CalibrationTable>,
) -> TaskReference {
    let peaks_of = |e: &ExpertSession, s: SensorId| -> Vec<u16> {
        e.events.iter().filter(|p| p.sensor == s).map(|p| p.peak_raw).collect()
    };
    let mean_peak_raw = PerSensor::from_fn(|s| {
        across_sessions(group.iter().map(|e| session_mean(peaks_of(e, s).into_iter(), f64::from)))
    });
    let newtons_for = |s: SensorId| {
        let table = calibration?;
        if !table.covers(s) {
            return None;
        }
        across_sessions(group.iter().map(|e| {
            session_mean(peaks_of(e, s).into_iter(), |p| {
                calibrate(f64::from(p), table, s).expect("sensor covered")
            })
        }))
    };
    let mean_peak_newtons = calibration.map(|_| PerSensor::from_fn(newtons_for));

    let counts: Vec<u32> = group.iter().map(|e| e.events.len() as u32).collect();
    let mut count_values: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();

    // Samples where T1, T2 and T3 all sit at or above the onset threshold.
    let engaged = |e: &ExpertSession| -> Vec<u16> {
        e.session
            .frames
            .iter()
            .filter(|f| SensorId::FINGERTIPS.iter().all(|&s| f.force(s) >= seg.onset_threshold))
            .map(|f| f.force(SensorId::T1))
            .collect()
    };
    let engaged_sample_raw =
        across_sessions(group.iter().map(|e| session_mean(engaged(e).into_iter(), f64::from)));
    let engaged_sample_newtons = calibration.filter(|t| t.covers(SensorId::T1)).and_then(|table| {
        across_sessions(group.iter().map(|e| {
            session_mean(engaged(e).into_iter(), |r| {
                calibrate(f64::from(r), table, SensorId::T1).expect("sensor covered")
            })
        }))
    });

    TaskReference {
        task,
        session_count: group.len(),
        index_fingertip: IndexFingertipMeans {
            press_peak_raw: mean_peak_raw[SensorId::T1],
            engaged_sample_raw,
            press_peak_newtons: mean_peak_newtons.as_ref().and_then(|m| m[SensorId::T1]),
            engaged_sample_newtons,
        },
        mean_peak_raw,
        mean_peak_newtons,
        press_count_min: counts.iter().copied().min().unwrap_or(0),
        press_count_max: counts.iter().copied().max().unwrap_or(0),
        mean_press_count: stable_mean(&mut count_values).unwrap_or(0.0),
        max_peak_raw: group
            .iter()
            .flat_map(|e| e.events.iter().map(|p| p.peak_raw))
            .max()
            .unwrap_or(0),
    }
}

/// True when a calibrated peak is strictly above the model's safe threshold.
pub fn safe_threshold_check(peak_newtons: f64, model: &ReferenceModel) -> bool {
    peak_newtons > model.safe_threshold_newtons
}

/// Attach safe-threshold flags to every task of a report. Presses on sensors
/// without a calibration curve are not evaluated.
pub fn annotate_report(report: &mut CompetencyReport, table: &CalibrationTable, threshold_newtons: f64) {
    for task in &mut report.tasks {
        let exceeded = task
            .presses
            .iter()
            .filter_map(|p| {
                let n = calibrate(f64::from(p.peak_raw), table, p.sensor).ok()?;
                (n > threshold_newtons).then_some(FlaggedPress {
                    sensor: p.sensor,
                    onset_ms: p.onset_ms,
                    peak_newtons: n,
                })
            })
            .collect();
        task.safety = Some(SafetySummary {
            threshold_newtons,
            exceeded,
        });
    }
}
