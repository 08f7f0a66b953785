//! Layer kernels with hand-derived forward and backward passes.
//!
//! Every layer operates on a zones-major matrix (`N x F`) and shares its
//! parameters across zones, except the feature-importance gate which holds
//! one weight per input cell.

mod activation;
mod adapters;
mod conv;
mod dense;
pub mod gradcheck;
mod importance;
mod indrnn;

pub use activation::{activation_apply, activation_grad, Activation};
pub use adapters::{
    concatenate, flatten_steps, gather_columns, gather_steps, reshape_to_steps, scatter_columns,
    scatter_steps, split_columns,
};
pub use conv::{Conv1d, Conv1dCache, Conv1dGrads};
pub use dense::{Dense, DenseCache, DenseGrads};
pub use gradcheck::{finite_difference_check, relative_error};
pub use importance::FeatureImportance;
pub use indrnn::{recurrent_bound, IndRnnCache, IndRnnGrads, IndRnnLayer, ZoneDistributedIndRnn};
