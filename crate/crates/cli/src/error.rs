use std::io;
use std::path::{Path, PathBuf};

use serde_json::json;

use palpation_core::assessment::AssessmentError;
use palpation_core::wire::SessionFileError;

pub const EXIT_DATA: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// A failure reported as one JSON object on stderr.
#[derive(Debug)]
pub struct CliError {
    pub exit: u8,
    pub code: &'static str,
    pub message: String,
    pub path: Option<PathBuf>,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            exit: EXIT_USAGE,
            code: "usage",
            message: message.into(),
            path: None,
        }
    }

    pub fn data(code: &'static str, message: impl Into<String>) -> Self {
        CliError {
            exit: EXIT_DATA,
            code,
            message: message.into(),
            path: None,
        }
    }

    pub fn at(mut self, path: &Path) -> Self {
        self.path = Some(path.to_path_buf());
        self
    }

    pub fn io(path: &Path, e: &io::Error) -> Self {
        let code = if e.kind() == io::ErrorKind::NotFound { "not_found" } else { "io" };
        CliError::data(code, format!("{}: {e}", path.display())).at(path)
    }

    pub fn session_file(path: &Path, e: SessionFileError) -> Self {
        match e {
            SessionFileError::Io(io) => CliError::io(path, &io),
            SessionFileError::Parse { .. } => CliError::data("parse", format!("{}: {e}", path.display())).at(path),
            SessionFileError::SchemaVersionMismatch { .. } => {
                CliError::data("schema_version", format!("{}: {e}", path.display())).at(path)
            }
        }
    }

    pub fn json(path: &Path, e: &serde_json::Error) -> Self {
        CliError::data("parse", format!("{}: {e}", path.display())).at(path)
    }

    pub fn to_json(&self) -> String {
        let mut body = json!({ "code": self.code, "message": self.message });
        if let Some(p) = &self.path {
            body["path"] = json!(p.display().to_string());
        }
        json!({ "error": body }).to_string()
    }
}

impl From<AssessmentError> for CliError {
    fn from(e: AssessmentError) -> Self {
        let mut err = CliError::data(e.code(), e.to_string());
        if matches!(e, AssessmentError::InvalidConfig(_)) {
            err.exit = EXIT_USAGE;
        }
        err
    }
}
