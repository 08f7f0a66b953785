//! Regularized loss, initialization, Adam, and the early-stopping training
//! loop.

mod adam;
mod init;
mod loss;
mod trainer;

pub use adam::{adam_step, constrain_recurrent, Adam};
pub use init::{init_weights, FI_INIT_RANGE};
pub use loss::{
    batch_gradients, data_loss, loss, regularization, regularization_grads, BatchResult,
};
pub use trainer::{
    mean_squared_error, train, train_with_observer, EpochRecord, StopReason, TrainConfig, TrainLog,
};
