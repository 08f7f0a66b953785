//! Versioned JSON checkpoints. Floats are written in shortest round-trip
//! form, so a reloaded network reproduces predictions bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Network;
use crate::dataset::LAYOUT_VERSION;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "focir-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// How the training data was partitioned on the time grid, so that later
/// evaluation reuses the same test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub slot_minutes: usize,
    pub start_weekday: usize,
    pub train_frac: f64,
    pub val_frac: f64,
}

impl Default for DataSpec {
    fn default() -> Self {
        DataSpec {
            slot_minutes: 10,
            start_weekday: 0,
            train_frac: 0.70,
            val_frac: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub data: DataSpec,
    pub network: Network,
}

impl Checkpoint {
    pub fn new(network: Network, data: DataSpec) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            data,
            network,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        ck.verify()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Rebuilds the architecture from the stored configuration and checks
    /// that every stored parameter array has the expected shape.
    fn verify(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "unknown format `{}`",
                self.format
            )));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let net = &self.network;
        if net.layout.version != LAYOUT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported feature layout version {}",
                net.layout.version
            )));
        }
        let fresh = Network::build(
            &net.config,
            net.n_zones,
            net.layout,
            net.standardizer.clone(),
        )?;
        if fresh.param_groups() != net.param_groups() {
            return Err(Error::Checkpoint(
                "parameter shapes do not match the stored configuration".into(),
            ));
        }
        for t in net.params() {
            t.check_finite("checkpoint parameters")?;
            if t.len() != t.shape().iter().product::<usize>() {
                return Err(Error::Checkpoint("parameter data length mismatch".into()));
            }
        }
        Ok(())
    }
}
