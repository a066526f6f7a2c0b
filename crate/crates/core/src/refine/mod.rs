//! Strategy refinement: behavioral cloning, KTO, DPO and SPAG objectives,
//! dataset resampling, and the training loops that chain them.

pub mod data;
pub mod losses;
pub mod trainer;

pub use data::{balance_by_game, scale_dataset, scale_targets, winning_trajectory_steps, ScaleMode};
pub use losses::{
    balance_lambdas, bc_loss, build_pairs, dpo_loss, estimate_z0, kto_loss, spag_assign_rewards, spag_loss, KtoParams,
    LossReport, Sample, Z0Estimator,
};
pub use trainer::{
    bc_steps_for, spag_samples, train, train_spag, write_metrics_csv, BcData, Method, MetricRow, StageConfig,
    TrainConfig, TrainOutcome,
};
