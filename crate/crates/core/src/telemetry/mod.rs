//! Domain types for sensors, frames and sessions, plus per-sample classification.

mod force;
mod frame;
mod health;
mod sensor;
mod session;

pub use force::{
    classify_force_level, quartet_to_color, FeedbackColor, ForceQuartet, QuartetScale,
    DEFAULT_QUARTET_BOUND, RAW_MAX,
};
pub use frame::{
    validate_orientation, Axis, FrameFlags, Markers, Orientation, Plausibility, SensorFrame,
    PITCH_RANGE, ROLL_RANGE, YAW_RANGE,
};
pub use health::{
    classify_health_metrics, compute_health_metrics, BaiBand, BmiCategory, BodyCategory,
    CategoryReport, Gender, HealthMetrics, NonPositiveAnthropometric, PatientProfile,
};
pub use sensor::{PerSensor, SensorId, UnknownSensor, SENSOR_COUNT};
pub use session::{
    Cohort, Session, SessionMeta, TaskKind, UnknownTask, NOMINAL_SAMPLE_RATE_HZ,
};
