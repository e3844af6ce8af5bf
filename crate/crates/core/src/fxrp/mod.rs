//! First stage: walk-forward training of the rate-prediction network.

mod data;
mod schedule;
mod store;
mod train;

pub use data::{build_sample, FxrpData, FxrpSample};
pub use schedule::{
    build_schedule, covering_block, k_star, make_splits, FitSchedule, ScheduleConfig, Split, Stage,
};
pub use store::{stitch_predictions, DayPredictions, PredictionStore};
pub use train::{
    baseline_random_walk, evaluate_mse, mse_batch_gradient, predict, random_walk_mse, to_rate_matrix, train_fxrp,
    FxrpConfig, FxrpModel,
};
