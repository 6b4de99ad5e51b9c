//! Deterministic binary tree with a six-nutrient reward vector at every leaf.
//!
//! An episode descends `depth` levels (action `0` = left, `1` = right) and pays
//! the reached leaf's vector on the final step. Leaves are indexed left to
//! right, so the path bits read most-significant first form the leaf index.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{EnvObservation, MultiObjectiveEnv, SimRng};
use crate::error::{Error, Result};

pub const N_NUTRIENTS: usize = 6;

const BUNDLED_DEPTH6: &str = include_str!("../../data/fruit_tree_depth6.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct FruitTreeConfig {
    pub depth: usize,
    pub leaf_rewards: Vec<[f64; N_NUTRIENTS]>,
}

impl FruitTreeConfig {
    /// The bundled depth-6 table.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_DEPTH6).expect("bundled leaf table is well formed")
    }

    /// Leaves drawn uniformly from `[0, 10]` per nutrient.
    pub fn random(depth: usize, seed: u64) -> Result<Self> {
        if depth == 0 || depth > 20 {
            return Err(Error::config("depth", format!("{depth} outside 1..=20")));
        }
        let mut rng = SimRng::seed_from_u64(seed);
        let leaf_rewards = (0..1usize << depth)
            .map(|_| std::array::from_fn(|_| rng.random_range(0.0..=10.0)))
            .collect();
        Ok(Self {
            depth,
            leaf_rewards,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses the plain-text leaf table: a `# fruit-tree depth=<d>` header, optional
    /// further `#` comment lines, then one leaf per line as six decimals.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "empty leaf table".into(),
        })?;
        let depth: usize = header
            .strip_prefix("# fruit-tree depth=")
            .and_then(|d| d.trim().parse().ok())
            .ok_or_else(|| Error::Parse {
                line: hline,
                reason: format!("expected `# fruit-tree depth=<d>`, found `{header}`"),
            })?;
        if depth == 0 || depth > 20 {
            return Err(Error::Parse {
                line: hline,
                reason: format!("depth {depth} outside 1..=20"),
            });
        }
        let mut leaf_rewards = Vec::with_capacity(1 << depth);
        for (line, l) in lines.filter(|(_, l)| !l.starts_with('#')) {
            let values = l
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    line,
                    reason: e.to_string(),
                })?;
            let leaf: [f64; N_NUTRIENTS] = values.try_into().map_err(|v: Vec<f64>| Error::Parse {
                line,
                reason: format!("expected {N_NUTRIENTS} values, found {}", v.len()),
            })?;
            if leaf.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Parse {
                    line,
                    reason: "leaf values must be finite and non-negative".into(),
                });
            }
            leaf_rewards.push(leaf);
        }
        let cfg = Self {
            depth,
            leaf_rewards,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# fruit-tree depth={}\n", self.depth);
        for leaf in &self.leaf_rewards {
            let row: Vec<String> = leaf.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(" ")).expect("write to string");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::config("depth", "must be at least 1"));
        }
        Error::check_len("fruit-tree leaves", 1 << self.depth, self.leaf_rewards.len())?;
        if self
            .leaf_rewards
            .iter()
            .flatten()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(Error::config("leaf_rewards", "entries must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Config-file form of the leaf table choice: bundled, from a file, or random.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FruitTreeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf_file: Option<PathBuf>,
    /// Generates a random table of this depth (seeded by `random_seed`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_seed: Option<u64>,
}

impl FruitTreeSpec {
    pub fn resolve(&self) -> Result<FruitTreeConfig> {
        match (&self.leaf_file, self.random_depth) {
            (Some(_), Some(_)) => Err(Error::config(
                "env.leaf_file",
                "set either leaf_file or random_depth, not both",
            )),
            (Some(path), None) => FruitTreeConfig::load(path),
            (None, Some(depth)) => FruitTreeConfig::random(depth, self.random_seed.unwrap_or(0)),
            (None, None) => Ok(FruitTreeConfig::bundled()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FruitTree {
    cfg: std::sync::Arc<FruitTreeConfig>,
    level: usize,
    index: usize,
    path: Vec<f64>,
}

impl FruitTree {
    pub fn new(cfg: FruitTreeConfig) -> Result<Self> {
        cfg.validate()?;
        let depth = cfg.depth;
        Ok(Self {
            cfg: std::sync::Arc::new(cfg),
            level: 0,
            index: 0,
            path: vec![0.0; depth],
        })
    }

    pub fn config(&self) -> &FruitTreeConfig {
        &self.cfg
    }

    /// `[level / depth, b_1, ..., b_depth]` with taken bits as `-1` (left) or
    /// `+1` (right) and untaken levels as `0`.
    fn encode(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.cfg.depth + 1);
        s.push(self.level as f64 / self.cfg.depth as f64);
        s.extend_from_slice(&self.path);
        s
    }
}

impl MultiObjectiveEnv for FruitTree {
    fn n_objectives(&self) -> usize {
        N_NUTRIENTS
    }

    fn state_dim(&self) -> usize {
        self.cfg.depth + 1
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.cfg.depth
    }

    fn reset(&mut self) -> EnvObservation {
        self.level = 0;
        self.index = 0;
        self.path.iter_mut().for_each(|b| *b = 0.0);
        EnvObservation {
            state: self.encode(),
            done: false,
            reward: vec![0.0; N_NUTRIENTS],
        }
    }

    fn step(&mut self, action: usize, _rng: &mut SimRng) -> Result<EnvObservation> {
        if self.level >= self.cfg.depth {
            return Err(Error::EpisodeDone);
        }
        if action >= 2 {
            return Err(Error::InvalidAction {
                action,
                n_actions: 2,
            });
        }
        self.path[self.level] = if action == 1 { 1.0 } else { -1.0 };
        self.index = 2 * self.index + action;
        self.level += 1;
        let done = self.level == self.cfg.depth;
        let reward = if done {
            self.cfg.leaf_rewards[self.index].to_vec()
        } else {
            vec![0.0; N_NUTRIENTS]
        };
        Ok(EnvObservation {
            state: self.encode(),
            done,
            reward,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(env: &mut FruitTree, actions: &[usize]) -> (usize, Vec<f64>) {
        let mut rng = SimRng::seed_from_u64(0);
        env.reset();
        let mut steps = 0;
        let mut total = vec![0.0; N_NUTRIENTS];
        for &a in actions {
            let obs = env.step(a, &mut rng).unwrap();
            steps += 1;
            for (t, r) in total.iter_mut().zip(&obs.reward) {
                *t += r;
            }
            if obs.done {
                break;
            }
        }
        (steps, total)
    }

    #[test]
    fn minimal_tree() {
        let cfg = FruitTreeConfig {
            depth: 1,
            leaf_rewards: vec![[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0, 0.0, 0.0]],
        };
        let mut env = FruitTree::new(cfg).unwrap();
        env.reset();
        let obs = env.step(0, &mut SimRng::seed_from_u64(0)).unwrap();
        assert!(obs.done);
        assert_eq!(obs.reward, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn bundled_table_shape_and_episode_length() {
        let cfg = FruitTreeConfig::bundled();
        assert_eq!(cfg.depth, 6);
        assert_eq!(cfg.leaf_rewards.len(), 64);
        let mut env = FruitTree::new(cfg).unwrap();
        let (steps, _) = run(&mut env, &[1; 10]);
        assert_eq!(steps, 6);
        assert!(matches!(
            env.step(0, &mut SimRng::seed_from_u64(0)),
            Err(Error::EpisodeDone)
        ));
    }

    #[test]
    fn path_bits_index_the_table() {
        let cfg = FruitTreeConfig::random(6, 42).unwrap();
        let table = cfg.leaf_rewards.clone();
        let mut env = FruitTree::new(cfg).unwrap();
        for leaf in 0..64usize {
            let bits: Vec<usize> = (0..6).rev().map(|b| (leaf >> b) & 1).collect();
            let (_, total) = run(&mut env, &bits);
            assert_eq!(total, table[leaf].to_vec());
            // Deterministic repeat.
            assert_eq!(run(&mut env, &bits).1, total);
        }
    }

    #[test]
    fn states_identify_nodes() {
        let mut env = FruitTree::new(FruitTreeConfig::random(3, 1).unwrap()).unwrap();
        let mut seen = std::collections::HashSet::new();
        let mut rng = SimRng::seed_from_u64(0);
        for leaf in 0..8usize {
            let s0 = env.reset().state;
            seen.insert(format!("{s0:?}"));
            for b in (0..3).rev() {
                let s = env.step((leaf >> b) & 1, &mut rng).unwrap().state;
                seen.insert(format!("{s:?}"));
            }
        }
        // 1 + 2 + 4 + 8 nodes.
        assert_eq!(seen.len(), 15);
    }

    #[test]
    fn text_roundtrip_and_header_errors() {
        let cfg = FruitTreeConfig::random(2, 3).unwrap();
        assert_eq!(FruitTreeConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert!(FruitTreeConfig::parse("1 2 3 4 5 6\n").is_err());
        assert!(FruitTreeConfig::parse("# fruit-tree depth=1\n1 2 3 4 5 6\n").is_err());
        assert!(FruitTreeConfig::parse("# fruit-tree depth=1\n1 2 3 4 5\n1 2 3 4 5 6\n").is_err());
    }

    #[test]
    fn random_table_range() {
        let cfg = FruitTreeConfig::random(6, 9).unwrap();
        assert!(cfg.leaf_rewards.iter().flatten().all(|v| (0.0..=10.0).contains(v)));
    }
}
