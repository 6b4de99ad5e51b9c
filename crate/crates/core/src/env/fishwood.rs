//! Fisherman task: each step the agent works either in the woods or at the river.
//!
//! Objectives are ordered `(wood, fish)`. The state is the current location
//! index (`0` = woods, `1` = river) and an action names the destination
//! location, which is also where the same step's resource draw happens.

use serde::{Deserialize, Serialize};

use super::{EnvObservation, MultiObjectiveEnv, SimRng};
use crate::error::{Error, Result};
use rand::Rng;

pub const WOODS: usize = 0;
pub const RIVER: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FishwoodConfig {
    #[serde(default = "default_prob")]
    pub woodprob: f64,
    #[serde(default = "default_prob")]
    pub fishprob: f64,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

fn default_prob() -> f64 {
    0.5
}

fn default_horizon() -> usize {
    200
}

impl Default for FishwoodConfig {
    fn default() -> Self {
        Self {
            woodprob: default_prob(),
            fishprob: default_prob(),
            horizon: default_horizon(),
        }
    }
}

impl FishwoodConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("woodprob", self.woodprob), ("fishprob", self.fishprob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(name, format!("{p} is not a probability")));
            }
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Fishwood {
    cfg: FishwoodConfig,
    location: usize,
    t: usize,
}

impl Fishwood {
    pub fn new(cfg: FishwoodConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            location: WOODS,
            t: 0,
        })
    }

    pub fn config(&self) -> &FishwoodConfig {
        &self.cfg
    }

    pub fn is_done(&self) -> bool {
        self.t >= self.cfg.horizon
    }
}

impl MultiObjectiveEnv for Fishwood {
    fn n_objectives(&self) -> usize {
        2
    }

    fn state_dim(&self) -> usize {
        1
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn reset(&mut self) -> EnvObservation {
        self.location = WOODS;
        self.t = 0;
        EnvObservation {
            state: vec![self.location as f64],
            done: false,
            reward: vec![0.0, 0.0],
        }
    }

    fn step(&mut self, action: usize, rng: &mut SimRng) -> Result<EnvObservation> {
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        if action >= 2 {
            return Err(Error::InvalidAction {
                action,
                n_actions: 2,
            });
        }
        self.location = action;
        // One uniform per step regardless of location keeps streams aligned.
        let u: f64 = rng.random();
        let mut reward = vec![0.0, 0.0];
        match self.location {
            WOODS if u < self.cfg.woodprob => reward[0] = 1.0,
            RIVER if u < self.cfg.fishprob => reward[1] = 1.0,
            _ => {}
        }
        self.t += 1;
        Ok(EnvObservation {
            state: vec![self.location as f64],
            done: self.is_done(),
            reward,
        })
    }
}

/// Expected-return front `{(woodprob * k, fishprob * (horizon - k)) : k = 0..=horizon}`,
/// ordered by increasing `k`.
pub fn fishwood_pareto_front(cfg: &FishwoodConfig) -> Vec<[f64; 2]> {
    let h = cfg.horizon;
    (0..=h)
        .map(|k| [cfg.woodprob * k as f64, cfg.fishprob * (h - k) as f64])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> SimRng {
        SimRng::seed_from_u64(seed)
    }

    #[test]
    fn reset_is_deterministic_and_empty() {
        let mut a = Fishwood::new(FishwoodConfig::default()).unwrap();
        let mut b = Fishwood::new(FishwoodConfig::default()).unwrap();
        let oa = a.reset();
        assert_eq!(oa, b.reset());
        assert_eq!(oa.state.len(), 1);
        assert!(!oa.done);
        assert_eq!(oa.reward, vec![0.0, 0.0]);
    }

    #[test]
    fn certain_wood_every_step() {
        let cfg = FishwoodConfig {
            woodprob: 1.0,
            ..Default::default()
        };
        let mut env = Fishwood::new(cfg).unwrap();
        env.reset();
        let mut r = rng(0);
        for _ in 0..50 {
            assert_eq!(env.step(WOODS, &mut r).unwrap().reward, vec![1.0, 0.0]);
        }
    }

    #[test]
    fn terminates_at_horizon_and_rejects_further_steps() {
        let mut env = Fishwood::new(FishwoodConfig::default()).unwrap();
        env.reset();
        let mut r = rng(1);
        for t in 1..=200 {
            let obs = env.step(t % 2, &mut r).unwrap();
            assert_eq!(obs.done, t == 200);
            assert!(obs.reward.iter().sum::<f64>() <= 1.0);
        }
        assert!(matches!(env.step(0, &mut r), Err(Error::EpisodeDone)));
    }

    #[test]
    fn always_wood_mean_return() {
        let mut env = Fishwood::new(FishwoodConfig::default()).unwrap();
        let mut r = rng(2);
        let episodes = 1000;
        let mut total = 0.0;
        for _ in 0..episodes {
            env.reset();
            loop {
                let obs = env.step(WOODS, &mut r).unwrap();
                total += obs.reward[0];
                assert_eq!(obs.reward[1], 0.0);
                if obs.done {
                    break;
                }
            }
        }
        let mean = total / episodes as f64;
        assert!((95.0..=105.0).contains(&mean), "{mean}");
    }

    #[test]
    fn front_points() {
        let front = fishwood_pareto_front(&FishwoodConfig::default());
        assert_eq!(front.len(), 201);
        assert!(front.iter().all(|p| (p[0] + p[1] - 100.0).abs() < 1e-12));

        let empty = FishwoodConfig {
            horizon: 0,
            ..Default::default()
        };
        assert_eq!(fishwood_pareto_front(&empty), vec![[0.0, 0.0]]);

        let skew = FishwoodConfig {
            woodprob: 0.3,
            fishprob: 0.7,
            horizon: 10,
        };
        let p = fishwood_pareto_front(&skew)[4];
        assert!((p[0] - 1.2).abs() < 1e-12 && (p[1] - 4.2).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        assert!(Fishwood::new(FishwoodConfig {
            woodprob: 1.5,
            ..Default::default()
        })
        .is_err());
        assert!(Fishwood::new(FishwoodConfig {
            horizon: 0,
            ..Default::default()
        })
        .is_err());
    }
}
