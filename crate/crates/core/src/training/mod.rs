//! Multi-task training: Adam, mini-batch epochs with early stopping, and
//! per-target fine-tuning of a pruned network.

mod adam;
mod trainer;

pub use adam::{adam_step, AdamConfig, OptimizerState, ParamSet};
pub use trainer::{
    batch_gradient, evaluate, fine_tune, multitask_loss, train, EarlyStopper, EpochLog, FineTuneConfig, StopReason,
    TrainConfig, TrainLog,
};
