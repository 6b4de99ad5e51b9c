//! Multi-objective episodic environments with vector rewards.

pub mod fishwood;
pub mod fruit_tree;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use fishwood::{fishwood_pareto_front, Fishwood, FishwoodConfig};
pub use fruit_tree::{FruitTree, FruitTreeConfig};

/// Generator type used for every stochastic draw in the crate.
pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvObservation {
    pub state: Vec<f64>,
    pub done: bool,
    pub reward: Vec<f64>,
}

pub trait MultiObjectiveEnv: Clone + Send + Sync {
    fn n_objectives(&self) -> usize;
    fn state_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Upper bound on episode length.
    fn horizon(&self) -> usize;
    fn reset(&mut self) -> EnvObservation;
    fn step(&mut self, action: usize, rng: &mut SimRng) -> Result<EnvObservation>;
}

/// Serializable choice of environment, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum EnvSpec {
    Fishwood(FishwoodConfig),
    FruitTree(fruit_tree::FruitTreeSpec),
}

impl EnvSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Fishwood(_) => "fishwood",
            EnvSpec::FruitTree(_) => "fruit-tree",
        }
    }

    pub fn n_objectives(&self) -> usize {
        match self {
            EnvSpec::Fishwood(_) => 2,
            EnvSpec::FruitTree(_) => fruit_tree::N_NUTRIENTS,
        }
    }
}
