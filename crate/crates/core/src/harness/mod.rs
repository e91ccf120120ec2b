//! Desk-scale experiment runner: toy peg-in-hole assets, a kinematic
//! environment, a cross-entropy trainer and scenario dispatch.

pub mod assets;
pub mod cem;
pub mod env;
pub mod experiment;
pub mod randomization;

pub use assets::{build_assets, make_toy_assets, AssetKind, AssetSpec, ToyAssets};
pub use cem::{cem_train, evaluate_policy, rollout, CemConfig, EpisodeStats, Evaluation, LinearPolicy, TrainRecord, TrainResult, TrainSetup};
pub use env::{EnvConfig, RewardKind, StepResult, ToyEnv};
pub use experiment::{
    control_checks, reward_ordering, run_control_experiment, run_experiment, run_training_ablation, sampling_not_worse,
    ControlCheck, ExperimentConfig, ExperimentKind, RewardOrdering, TrainingRuns, TrainingSummary,
};
pub use randomization::{EpisodeStart, RandomizationSpec};
