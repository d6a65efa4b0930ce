//! Per-run manifest: what ran, on which inputs, and what it wrote.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::AppError;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Divergence {
    pub diverged: bool,
    pub sweep: Option<usize>,
    pub reason: Option<String>,
    /// Trend of `|mean(C)|` over post-burn-in sweeps, per chain.
    pub drift_slope: Vec<f64>,
    pub drift_t_stat: Vec<f64>,
    /// Significant upward drift of the criminality mean in an unanchored run.
    pub drift_detected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
    pub exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence: Option<Divergence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweeps_per_second: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_time_seconds: 0.0,
            exit_code: 0,
            divergence: None,
            score: None,
            sweeps_per_second: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<(), AppError> {
        let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes `<out_dir>/<command>.manifest.json`.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, AppError> {
        let path = out_dir.join(format!("{}.manifest.json", self.command));
        let mut text = serde_json::to_string_pretty(self).expect("manifest serialises");
        text.push('\n');
        write_file(&path, text.as_bytes())?;
        Ok(path)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}
