use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::commands::CliError;

/// Record of one invocation that wrote files. Stored next to its primary
/// artifact as `<artifact>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &Path, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.into(),
            config: Some(config.to_path_buf()),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    /// Writes `contents` to `path` and records it.
    pub fn write(&mut self, path: &Path, contents: &[u8]) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        }
        fs::write(path, contents).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    /// Stamps the elapsed time and writes the manifest beside the first output.
    pub fn finish(mut self, started: Instant) -> Result<PathBuf, CliError> {
        self.wall_clock_seconds = started.elapsed().as_secs_f64();
        let primary = self.outputs.first().cloned().expect("manifest without outputs");
        let mut name = primary.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        let path = primary.with_file_name(name);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
