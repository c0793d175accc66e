//! Examogram scoring: contributions, the three criteria, the 30-point total
//! and the OSCE rating.

mod contributions;
mod criteria;
mod osce;
mod render;
mod report;

use serde::{Deserialize, Serialize};

pub use contributions::{sensor_contributions, ContributionMap, NoPresses};
pub use criteria::{
    criterion_correct_use, criterion_force_transition, criterion_wrong_use, target_quartets, Criterion,
    CriterionScore, ForceTransitionError, Violation, FINGERTIP_TOLERANCE, HYPOTHENAR_LIMIT, LIVER_FOCUS_MIN,
    MAX_POINTS, THENAR_LIMIT,
};
pub use osce::{osce_rating, OsceRating, OsceThresholds, TotalOutOfRange};
pub use render::render_text;
pub use report::{
    assess, assess_segmented, AssessmentError, CompetencyReport, CriterionAverages, FlaggedPress, ReportConfig,
    SafetySummary, SegmentedTask, TaskAssessment, REPORT_SCHEMA_VERSION,
};

pub const MAX_TOTAL: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssessmentConfig {
    /// Points lost per percentage point of violation.
    pub penalty_slope: f64,
    pub osce: OsceThresholds,
}

impl Default for AssessmentConfig {
    fn default() -> Self {
        AssessmentConfig {
            penalty_slope: 1.0,
            osce: OsceThresholds::default(),
        }
    }
}

impl AssessmentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.penalty_slope.is_finite() && self.penalty_slope > 0.0) {
            return Err(format!("penalty_slope must be positive, got {}", self.penalty_slope));
        }
        self.osce.validate()
    }
}
