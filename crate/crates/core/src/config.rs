//! Engine configuration file (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assessment::AssessmentConfig;
use crate::reference::ReferenceConfig;
use crate::segmentation::SegmentationConfig;

pub const ENV_HTTP_LISTEN: &str = "PALP_HTTP_LISTEN";
pub const ENV_INGEST_LISTEN: &str = "PALP_INGEST_LISTEN";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ListenConfig {
    /// HTTP and WebSocket endpoint.
    pub http: String,
    /// Raw wire-frame TCP ingest.
    pub ingest: String,
}

impl Default for ListenConfig {
    fn default() -> Self {
        ListenConfig {
            http: "127.0.0.1:8080".into(),
            ingest: "127.0.0.1:7878".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub reference_model: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
    /// Where finalized sessions and reports are written.
    pub data_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            reference_model: None,
            calibration: None,
            data_dir: PathBuf::from("palp-data"),
        }
    }
}

/// Every tunable of the engine. Missing sections take their defaults; the
/// quartet bound lives in `segmentation.quartet_bound`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub segmentation: SegmentationConfig,
    pub assessment: AssessmentConfig,
    pub reference: ReferenceConfig,
    pub paths: PathsConfig,
    pub listen: ListenConfig,
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.segmentation
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.assessment.validate().map_err(ConfigError::Invalid)?;
        let t = self.reference.safe_threshold_newtons;
        if !(t.is_finite() && t > 0.0) {
            return Err(ConfigError::Invalid(format!("safe_threshold_newtons must be positive, got {t}")));
        }
        for (name, addr) in [("listen.http", &self.listen.http), ("listen.ingest", &self.listen.ingest)] {
            if addr.parse::<std::net::SocketAddr>().is_err() {
                return Err(ConfigError::Invalid(format!("{name} {addr:?} is not a socket address")));
            }
        }
        Ok(())
    }

    /// Listen addresses may be overridden from the environment.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = var(ENV_HTTP_LISTEN) {
            self.listen.http = v;
        }
        if let Some(v) = var(ENV_INGEST_LISTEN) {
            self.listen.ingest = v;
        }
        self.validate()
    }
}
