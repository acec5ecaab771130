//! JSON configuration files. Each file names its schema version and holds
//! the configuration of one subcommand under a key named after it.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use probelab_core::eval::ExperimentConfig;
use probelab_core::SynthConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthFile {
    pub schema_version: u32,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub schema_version: u32,
    pub experiment: ExperimentConfig,
}

trait Versioned {
    fn schema_version(&self) -> u32;
}

impl Versioned for SynthFile {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

impl Versioned for ExperimentFile {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

fn load<T: DeserializeOwned + Versioned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: T = serde_json::from_str(&text)
        .with_context(|| format!("invalid config {}", path.display()))?;
    if file.schema_version() != SCHEMA_VERSION {
        bail!(
            "{}: unsupported schema_version {} (expected {SCHEMA_VERSION})",
            path.display(),
            file.schema_version()
        );
    }
    Ok(file)
}

pub fn load_synth(path: &Path) -> Result<SynthConfig> {
    let cfg = load::<SynthFile>(path)?.synth;
    cfg.validate()
        .with_context(|| format!("invalid config {}", path.display()))?;
    Ok(cfg)
}

pub fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    let cfg = load::<ExperimentFile>(path)?.experiment;
    cfg.validate()
        .with_context(|| format!("invalid config {}", path.display()))?;
    Ok(cfg)
}
