use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::sim::SchemeFailures;

/// `git describe` of the source tree at build time, or the package version.
pub const VERSION: &str = match option_env!("CIBLP_GIT_DESCRIBE") {
    Some(v) => v,
    None => env!("CARGO_PKG_VERSION"),
};

#[derive(Debug, Clone, Serialize)]
pub struct FailureCount {
    pub scheme: String,
    pub n_block: usize,
    pub failures: usize,
    pub blocks: usize,
}

/// Everything needed to rerun a command: written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
    pub failures: Vec<FailureCount>,
    pub config: Option<ExperimentConfig>,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: Option<ExperimentConfig>) -> Self {
        RunManifest {
            command: command.into(),
            version: VERSION.into(),
            seed,
            started_unix: unix_now(),
            finished_unix: 0.0,
            outputs: Vec::new(),
            failures: Vec::new(),
            config,
        }
    }

    pub fn record_failures(&mut self, n_block: usize, failures: &[SchemeFailures]) {
        self.failures.extend(failures.iter().map(|f| FailureCount {
            scheme: f.scheme.clone(),
            n_block,
            failures: f.failures,
            blocks: f.blocks,
        }));
    }

    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.finished_unix = unix_now();
        let text = toml::to_string(&self).map_err(|e| Error::Io(format!("manifest: {e}")))?;
        let path = dir.join("manifest.toml");
        std::fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}
