//! The three scoring criteria. Each is worth ten points per task.
//!
//! Limits are in percentage points of contribution share. A criterion that
//! is met scores 10; otherwise its violation `v` (how far past the limit the
//! session went) reduces the score to `max(0, 10 − slope·v)`. Force
//! transition instead scores the fraction of presses in the right quartets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::segmentation::PressEvent;
use crate::telemetry::{ForceQuartet, SensorId, TaskKind};

use super::{AssessmentConfig, ContributionMap};

pub const MAX_POINTS: f64 = 10.0;

/// Combined thenar (E1 + E2) share allowed, percent.
pub const THENAR_LIMIT: f64 = 20.0;
/// Hypothenar (E3) share allowed, percent.
pub const HYPOTHENAR_LIMIT: f64 = 10.0;
/// Allowed deviation of each fingertip share from the fingertip mean, percentage points.
pub const FINGERTIP_TOLERANCE: f64 = 20.0;
/// Minimum combined share of the liver-focus sites, percent.
pub const LIVER_FOCUS_MIN: f64 = 50.0;

/// Comparisons absorb this much floating-point noise so exact boundaries pass.
const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    WrongUse,
    CorrectUse,
    ForceTransition,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [
        Criterion::WrongUse,
        Criterion::CorrectUse,
        Criterion::ForceTransition,
    ];

    pub fn title(self) -> &'static str {
        match self {
            Criterion::WrongUse => "Wrong use of hand",
            Criterion::CorrectUse => "Correct use of hand",
            Criterion::ForceTransition => "Force magnitude transition",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.title())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Distance past the limit, in percentage points.
    pub magnitude: f64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionScore {
    pub criterion: Criterion,
    pub task: TaskKind,
    pub points: f64,
    pub violation: Option<Violation>,
}

impl CriterionScore {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }

    fn pass(criterion: Criterion, task: TaskKind) -> Self {
        CriterionScore {
            criterion,
            task,
            points: MAX_POINTS,
            violation: None,
        }
    }

    fn penalized(criterion: Criterion, task: TaskKind, v: f64, slope: f64, description: String) -> Self {
        if v <= BOUNDARY_EPS {
            return Self::pass(criterion, task);
        }
        CriterionScore {
            criterion,
            task,
            points: (MAX_POINTS - slope * v).max(0.0),
            violation: Some(Violation {
                magnitude: v,
                description,
            }),
        }
    }
}

/// Heel of the hand on the abdomen: `C(E1) + C(E2) ≤ 20` and `C(E3) ≤ 10`.
pub fn criterion_wrong_use(c: &ContributionMap, task: TaskKind, cfg: &AssessmentConfig) -> CriterionScore {
    let thenar = c.get(SensorId::E1) + c.get(SensorId::E2);
    let hypothenar = c.get(SensorId::E3);
    let over_thenar = (thenar - THENAR_LIMIT).max(0.0);
    let over_hypo = (hypothenar - HYPOTHENAR_LIMIT).max(0.0);
    let mut parts = Vec::new();
    if over_thenar > BOUNDARY_EPS {
        parts.push(format!("thenar share {thenar:.2}% exceeds {THENAR_LIMIT}%"));
    }
    if over_hypo > BOUNDARY_EPS {
        parts.push(format!("hypothenar share {hypothenar:.2}% exceeds {HYPOTHENAR_LIMIT}%"));
    }
    CriterionScore::penalized(
        Criterion::WrongUse,
        task,
        over_thenar + over_hypo,
        cfg.penalty_slope,
        parts.join("; "),
    )
}

/// Balanced fingertips for superficial/deep palpation; index-finger focus for the liver edge.
pub fn criterion_correct_use(c: &ContributionMap, task: TaskKind, cfg: &AssessmentConfig) -> CriterionScore {
    match task {
        TaskKind::Superficial | TaskKind::Deep => {
            let tips = SensorId::FINGERTIPS.map(|s| c.get(s));
            let mean = tips.iter().sum::<f64>() / 3.0;
            let (worst, deviation) = SensorId::FINGERTIPS
                .iter()
                .zip(tips)
                .map(|(&s, share)| (s, (share - mean).abs()))
                .fold((SensorId::T1, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            CriterionScore::penalized(
                Criterion::CorrectUse,
                task,
                deviation - FINGERTIP_TOLERANCE,
                cfg.penalty_slope,
                format!(
                    "{worst} deviates {deviation:.2} points from the fingertip mean {mean:.2}% (tolerance {FINGERTIP_TOLERANCE})"
                ),
            )
        }
        TaskKind::Liver => {
            let focus = c.sum_of(&SensorId::LIVER_FOCUS);
            CriterionScore::penalized(
                Criterion::CorrectUse,
                task,
                LIVER_FOCUS_MIN - focus,
                cfg.penalty_slope,
                format!("index-finger focus share {focus:.2}% is below {LIVER_FOCUS_MIN}%"),
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ForceTransitionError {
    #[error("force transition is not graded for the {0} task")]
    NotApplicable(TaskKind),
    #[error("no presses on permitted sensors")]
    NoPresses,
}

/// Quartets a press peak should land in for this task.
pub fn target_quartets(task: TaskKind) -> Option<[ForceQuartet; 2]> {
    match task {
        TaskKind::Superficial => Some([ForceQuartet::Q1, ForceQuartet::Q2]),
        TaskKind::Deep => Some([ForceQuartet::Q3, ForceQuartet::Q4]),
        TaskKind::Liver => None,
    }
}

/// Ten points scaled by the fraction of permitted-sensor presses whose peak
/// falls in the task's target quartets. Error-sensor presses are ignored.
pub fn criterion_force_transition(
    events: &[PressEvent],
    task: TaskKind,
) -> Result<CriterionScore, ForceTransitionError> {
    let targets = target_quartets(task).ok_or(ForceTransitionError::NotApplicable(task))?;
    let graded: Vec<&PressEvent> = events.iter().filter(|e| e.sensor.is_permitted()).collect();
    if graded.is_empty() {
        return Err(ForceTransitionError::NoPresses);
    }
    let n = graded.len();
    let correct = graded.iter().filter(|e| targets.contains(&e.peak_quartet)).count();
    if correct == n {
        return Ok(CriterionScore::pass(Criterion::ForceTransition, task));
    }
    let wrong = n - correct;
    Ok(CriterionScore {
        criterion: Criterion::ForceTransition,
        task,
        points: MAX_POINTS * correct as f64 / n as f64,
        violation: Some(Violation {
            magnitude: 100.0 * wrong as f64 / n as f64,
            description: format!(
                "{wrong} of {n} press peaks outside {}/{}",
                targets[0], targets[1]
            ),
        }),
    })
}
