//! Preference-conditioned PPO with min-norm controllability weighting.

pub mod gae;
pub mod normalize;
pub mod policy;
pub mod preference;
pub mod surrogate;
pub mod trainer;

pub use gae::{gae_advantages, lambda_returns, standardize};
pub use normalize::{amvs, hinge_violation, mse, normalize_reward, RunningNorm};
pub use policy::{evaluate_policy, rollout, ActionMode, EpisodeRecord, PreferencePolicy};
pub use preference::{PreferenceSet, PreferenceVector};
pub use surrogate::{
    clip_indicator, clipped_surrogate, min_norm_2, moc_vectors, moc_weights, objective_coefficients,
    scalarized_policy_loss, value_loss, EpisodeSignals, LossCoefficients, MinNormWeights, PolicyBatch,
    PolicyLoss,
};
pub use trainer::{
    linear_ppo_train, moc_train, AlignmentTarget, GroupStats, IterationRecord, PpoConfig, TrainLog,
    TrainOutcome, WeightMode,
};
