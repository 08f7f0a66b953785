//! Network assembly for the full architecture and its ablation variants,
//! importance-score extraction, and checkpoints.

mod checkpoint;
mod config;
mod importance;
mod network;

pub use checkpoint::{Checkpoint, DataSpec, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use config::{ModelConfig, Variant};
pub use importance::{extract_importance, ImportanceReport};
pub use network::{ForwardCache, Network, ParamGroup, ParamKind};

#[cfg(test)]
mod tests;
