//! Serializable description of one experiment run.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use irsdm::{BenchOptions, Scheme, SystemConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Converge,
    SweepM,
    SweepPosition,
    Single,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Converge => "converge",
            Experiment::SweepM => "sweep-m",
            Experiment::SweepPosition => "sweep-position",
            Experiment::Single => "single",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Swept input: `M` values for `converge`, `sweep-m` and `single`, `d_AI`
/// values for `sweep-position`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub config: SystemConfig,
    pub schemes: Vec<Scheme>,
    pub axis: Axis,
    pub seed: u64,
    pub version: String,
    #[serde(default)]
    pub options: BenchOptions,
    /// Files written by the run, relative to the output directory.
    #[serde(default)]
    pub outputs: Vec<String>,
    /// Wall-clock seconds.
    #[serde(default)]
    pub duration: f64,
}

impl RunManifest {
    pub fn new(experiment: Experiment, config: SystemConfig, schemes: Vec<Scheme>, axis: Axis) -> Self {
        RunManifest {
            experiment,
            seed: config.seed,
            config,
            schemes,
            axis,
            version: env!("CARGO_PKG_VERSION").to_string(),
            options: BenchOptions::default(),
            outputs: Vec::new(),
            duration: 0.0,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        m.config.validate()?;
        Ok(m)
    }

    pub fn m_values(&self) -> Vec<usize> {
        self.axis.values.iter().map(|&v| v as usize).collect()
    }
}
