//! Forecasting per-zone ride-hailing demand and supply-demand gap when zone
//! adjacency has been anonymised.
//!
//! The model gates every input cell through a learned feature-importance
//! layer, learns cross-zone patterns with a 1D convolution sliding over the
//! zone axis, and learns temporal patterns with an independently recurrent
//! network applied to every zone with shared parameters. A per-zone dense
//! head combines both branches with the context features.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod focirnet;
pub mod nnkernel;
pub mod synthgen;
pub mod tensor;
pub mod training;

#[cfg(test)]
mod testutil;

pub use error::{Error, ErrorKind, Result};
pub use tensor::Tensor;
