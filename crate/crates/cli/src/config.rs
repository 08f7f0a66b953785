use std::path::Path;

use anyhow::{Context, Result};
use focir::focirnet::{DataSpec, ModelConfig};
use focir::synthgen::SynthConfig;
use focir::training::TrainConfig;
use serde::Deserialize;

/// How raw tables map onto the space-time grid, and how samples are split.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub slot_minutes: usize,
    /// Inferred from the largest slot index when absent.
    pub num_days: Option<usize>,
    pub start_weekday: usize,
    pub train_frac: f64,
    pub val_frac: f64,
    /// Inferred from the largest weather category when absent.
    pub n_weather_categories: Option<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        let spec = DataSpec::default();
        DataConfig {
            slot_minutes: spec.slot_minutes,
            num_days: None,
            start_weekday: spec.start_weekday,
            train_frac: spec.train_frac,
            val_frac: spec.val_frac,
            n_weather_categories: None,
        }
    }
}

impl DataConfig {
    pub fn spec(&self) -> DataSpec {
        DataSpec {
            slot_minutes: self.slot_minutes,
            start_weekday: self.start_weekday,
            train_frac: self.train_frac,
            val_frac: self.val_frac,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub synth: SynthConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path`, or returns the defaults when no file is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            crate::UsageError(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}
