//! Controllable multi-objective policy optimization: environments, the
//! preference-conditioned PPO learner, Pareto-set metrics and an experiment
//! harness.

pub mod env;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod moc;
pub mod numerics;
pub mod par;

pub use error::{Error, Result};
