//! Expert best-practice model and force calibration.

mod calibration;
mod model;

pub use calibration::{
    calibrate, calibrate_all, CalibrationError, CalibrationTable, KnotCurve, NoTableForSensor,
    CALIBRATION_SCHEMA_VERSION,
};
pub use model::{
    annotate_report, build_reference, safe_threshold_check, ExpertSession, IndexFingertipMeans,
    MeanInterpretation, PublishedMeans, ReferenceConfig, ReferenceError, ReferenceModel, TaskReference,
    DEEP_INDEX_MEAN_NEWTONS, REFERENCE_SCHEMA_VERSION, SAFE_THRESHOLD_NEWTONS, SUPERFICIAL_INDEX_MEAN_NEWTONS,
};
