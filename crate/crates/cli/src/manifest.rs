use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::{write_file, CliError};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to replay one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Parsed arguments with defaults filled in.
    pub args: Command,
    /// Model or sweep configuration as the library saw it.
    pub resolved: serde_json::Value,
    pub seed: u64,
    pub version: String,
    /// SHA-256 of the input corpus in canonical UCI form.
    pub corpus_fingerprint: Option<String>,
    pub started: String,
    pub finished: String,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Core(hitopic_core::Error::format(path, e.line(), e.to_string())))
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_file(&dir.join(MANIFEST_FILE), text + "\n")
    }
}

pub(crate) fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
