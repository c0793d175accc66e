//! Runtime settings for the service, resolved from an [`EngineConfig`].

use std::path::{Path, PathBuf};
use std::time::Duration;

use palpation_core::assessment::AssessmentConfig;
use palpation_core::config::EngineConfig;
use palpation_core::reference::{CalibrationTable, ReferenceModel};
use palpation_core::segmentation::SegmentationConfig;

use crate::ServiceError;

pub const DEFAULT_HEARTBEAT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub segmentation: SegmentationConfig,
    pub assessment: AssessmentConfig,
    /// Finalized sessions and reports are written here when set.
    pub data_dir: Option<PathBuf>,
    pub calibration: Option<CalibrationTable>,
    pub reference: Option<ReferenceModel>,
    /// Used when no reference model is loaded.
    pub safe_threshold_newtons: f64,
    pub heartbeat: Duration,
    pub http_listen: String,
    pub ingest_listen: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let engine = EngineConfig::default();
        ServiceConfig {
            segmentation: engine.segmentation,
            assessment: engine.assessment,
            data_dir: None,
            calibration: None,
            reference: None,
            safe_threshold_newtons: engine.reference.safe_threshold_newtons,
            heartbeat: DEFAULT_HEARTBEAT,
            http_listen: engine.listen.http,
            ingest_listen: engine.listen.ingest,
        }
    }
}

impl ServiceConfig {
    /// Load the reference model and calibration named in `paths`.
    pub fn from_engine(cfg: &EngineConfig) -> Result<Self, ServiceError> {
        let reference = match &cfg.paths.reference_model {
            Some(p) => {
                let model: ReferenceModel = read_json(p)?;
                model
                    .validate()
                    .map_err(|e| ServiceError::BadRequest(format!("{}: {e}", p.display())))?;
                Some(model)
            }
            None => None,
        };
        let calibration = match &cfg.paths.calibration {
            Some(p) => Some(read_json(p)?),
            None => None,
        };
        Ok(ServiceConfig {
            segmentation: cfg.segmentation,
            assessment: cfg.assessment,
            data_dir: Some(cfg.paths.data_dir.clone()),
            calibration,
            reference,
            safe_threshold_newtons: cfg.reference.safe_threshold_newtons,
            heartbeat: DEFAULT_HEARTBEAT,
            http_listen: cfg.listen.http.clone(),
            ingest_listen: cfg.listen.ingest.clone(),
        })
    }

    /// The reference model's threshold wins over the configured one.
    pub fn effective_threshold(&self) -> f64 {
        self.reference
            .as_ref()
            .map_or(self.safe_threshold_newtons, |m| m.safe_threshold_newtons)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ServiceError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ServiceError::Storage(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ServiceError::BadRequest(format!("{}: {e}", path.display())))
}
