use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use acspeed::SimScene;
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::eval::Suite;
use crate::settings::Settings;

/// Everything a command ran with, beyond its input files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub settings: Settings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SimScene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Warnings {
    /// Input recordings that ended before their declared length.
    pub truncated_inputs: usize,
    /// PCM samples that hit the rails.
    pub clipped_samples: usize,
    pub messages: Vec<String>,
}

/// Sidecar written beside every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    pub config: Snapshot,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub warnings: Warnings,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, config: Snapshot) -> Self {
        Self {
            command: command.to_string(),
            args,
            config,
            inputs: vec![],
            outputs: vec![],
            seed: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_s: unix_now(),
            finished_unix_s: 0.0,
            warnings: Warnings::default(),
        }
    }

    pub fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.messages.push(msg);
    }

    /// Stamps the finish time and writes one sidecar per output.
    pub fn finish(mut self) -> Result<()> {
        self.finished_unix_s = unix_now();
        let text = serde_json::to_string_pretty(&self)?;
        for out in &self.outputs {
            let path = sidecar_path(out);
            std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| acspeed::Error::Schema(e.to_string()))
            .with_context(|| format!("in manifest {}", path.display()))
    }
}
