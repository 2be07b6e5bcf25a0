//! Training: Adam, schedule, mini-batching, dropout, warm-start, projection
//! and stability-driven early stopping.

mod adam;
mod early_stop;
mod history;
mod minibatch;
mod projection;
mod train;
mod warm_start;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use early_stop::{early_stop_update, BestState, Candidate};
pub use history::{EpochRecord, TrainHistory};
pub use minibatch::split_minibatches;
pub use projection::{project_params, project_row_l1};
pub use train::{lr_schedule, train, train_with_observer, StepInfo, TrainConfig, TrainMode, TrainOutcome};
pub use warm_start::{warm_start, warm_start_layer, WarmStartOptions};
