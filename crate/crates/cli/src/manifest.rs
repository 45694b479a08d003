use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance record written into every output directory before any other
/// output.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub tool_version: String,
    #[serde(rename = "timestampUTC")]
    pub timestamp_utc: String,
}

impl RunManifest {
    pub fn new(command: String, config_path: Option<PathBuf>, seed: u64, output_dir: &Path) -> Self {
        Self {
            command,
            config_path,
            seed,
            output_dir: output_dir.to_path_buf(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_utc: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    /// Create the directory if needed and write the manifest through a
    /// temporary file and a rename.
    pub fn write(&self) -> io::Result<()> {
        fs::create_dir_all(&self.output_dir)?;
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(&self.output_dir.join(MANIFEST_FILE), &text)
    }
}

pub fn write_atomic(path: &Path, text: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)
}
