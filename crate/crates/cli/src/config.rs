//! Layered configuration: defaults, experiment preset, JSON file, flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use irsdm::SystemConfig;
use serde_json::{Map, Value};

/// One flag per configuration key. Unset flags leave the lower layers alone.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON object with any subset of the configuration keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<std::path::PathBuf>,
    /// Transmit antennas.
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// IRS elements.
    #[arg(long = "m")]
    pub m: Option<usize>,
    /// Receive antennas per user.
    #[arg(long = "k")]
    pub k: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub ps_dbm: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma2_dbm: Option<f64>,
    #[arg(long)]
    pub beta1: Option<f64>,
    #[arg(long)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub carrier_hz: Option<f64>,
    #[arg(long)]
    pub d_ai: Option<f64>,
    #[arg(long)]
    pub d_ab: Option<f64>,
    #[arg(long)]
    pub d_ae: Option<f64>,
    #[arg(long)]
    pub theta_ai: Option<f64>,
    #[arg(long)]
    pub theta_ab: Option<f64>,
    #[arg(long)]
    pub theta_ae: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    fn overrides(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        };
        put("N", self.n.map(Value::from));
        put("M", self.m.map(Value::from));
        put("K", self.k.map(Value::from));
        put("Ps_dbm", self.ps_dbm.map(Value::from));
        put("sigma2_dbm", self.sigma2_dbm.map(Value::from));
        put("beta1", self.beta1.map(Value::from));
        put("beta2", self.beta2.map(Value::from));
        put("carrier_hz", self.carrier_hz.map(Value::from));
        put("d_AI", self.d_ai.map(Value::from));
        put("d_AB", self.d_ab.map(Value::from));
        put("d_AE", self.d_ae.map(Value::from));
        put("theta_AI", self.theta_ai.map(Value::from));
        put("theta_AB", self.theta_ab.map(Value::from));
        put("theta_AE", self.theta_ae.map(Value::from));
        put("epsilon", self.epsilon.map(Value::from));
        put("seed", self.seed.map(Value::from));
        m
    }

    /// Resolves the configuration. `preset` holds experiment-specific
    /// defaults that the file and the flags may still override.
    pub fn resolve(&self, preset: &[(&str, Value)]) -> Result<SystemConfig> {
        let file = match &self.config {
            Some(p) => read_object(p)?,
            None => Map::new(),
        };
        resolve_layers(preset, file, self.overrides())
    }
}

fn read_object(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    match serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))? {
        Value::Object(m) => Ok(m),
        _ => bail!("{}: configuration must be a JSON object", path.display()),
    }
}

/// Merges the layers in order and validates the result.
pub fn resolve_layers(
    preset: &[(&str, Value)],
    file: Map<String, Value>,
    flags: Map<String, Value>,
) -> Result<SystemConfig> {
    let mut merged = Map::new();
    for (k, v) in preset {
        merged.insert(k.to_string(), v.clone());
    }
    merged.extend(file);
    merged.extend(flags);
    let cfg: SystemConfig = serde_json::from_value(Value::Object(merged)).context("invalid configuration")?;
    cfg.validate()?;
    Ok(cfg)
}
