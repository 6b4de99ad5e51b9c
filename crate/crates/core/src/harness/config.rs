//! Experiment configuration (TOML).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::EnvSpec;
use crate::error::{Error, Result};
use crate::metrics::HypervolumeOptions;
use crate::moc::{ActionMode, PpoConfig, PreferenceSet, WeightMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Moc,
    LinearPpo,
    /// Drops the alignment term: `(c1, c2) = (1, 0)` throughout.
    MocAblationNoControl,
    /// Drops the return term: `(c1, c2) = (0, 1)` throughout.
    MocAblationNoMo,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Moc,
        Algorithm::LinearPpo,
        Algorithm::MocAblationNoControl,
        Algorithm::MocAblationNoMo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Moc => "moc",
            Algorithm::LinearPpo => "linear-ppo",
            Algorithm::MocAblationNoControl => "moc-ablation-no-control",
            Algorithm::MocAblationNoMo => "moc-ablation-no-mo",
        }
    }

    /// Weight mode of the single conditioned policy; `None` for linear PPO.
    pub fn weight_mode(self) -> Option<WeightMode> {
        match self {
            Algorithm::Moc => Some(WeightMode::MinNorm),
            Algorithm::LinearPpo => None,
            Algorithm::MocAblationNoControl => Some(WeightMode::ObjectiveOnly),
            Algorithm::MocAblationNoMo => Some(WeightMode::ConstraintOnly),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|a| a.name()).collect();
                Error::config("algorithm", format!("unknown `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

fn default_eval_episodes() -> usize {
    20
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub ppo: PpoConfig,
    pub train_preferences: PreferenceSet,
    /// Defaults to the training preferences.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_preferences: Option<PreferenceSet>,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default)]
    pub eval_mode: ActionMode,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Hypervolume reference point; defaults to the origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    #[serde(default)]
    pub hypervolume: HypervolumeOptions,
}

impl ExperimentConfig {
    /// Minimal config with defaults for everything optional.
    pub fn new(env: EnvSpec, algorithm: Algorithm, train_preferences: PreferenceSet) -> Self {
        Self {
            env,
            algorithm,
            ppo: PpoConfig::default(),
            train_preferences,
            eval_preferences: None,
            eval_episodes: default_eval_episodes(),
            eval_mode: ActionMode::default(),
            seeds: default_seeds(),
            out_dir: default_out_dir(),
            reference: None,
            hypervolume: HypervolumeOptions::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn eval_preferences(&self) -> &PreferenceSet {
        self.eval_preferences.as_ref().unwrap_or(&self.train_preferences)
    }

    pub fn reference(&self) -> Vec<f64> {
        self.reference
            .clone()
            .unwrap_or_else(|| vec![0.0; self.env.n_objectives()])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.env.n_objectives();
        if self.train_preferences.dim() != n {
            return Err(Error::config(
                "train_preferences",
                format!("length {} but the environment has {n} objectives", self.train_preferences.dim()),
            ));
        }
        if let Some(eval) = &self.eval_preferences {
            if eval.dim() != n {
                return Err(Error::config(
                    "eval_preferences",
                    format!("length {} but the environment has {n} objectives", eval.dim()),
                ));
            }
            if self.algorithm == Algorithm::LinearPpo && eval != &self.train_preferences {
                return Err(Error::config(
                    "eval_preferences",
                    "linear-ppo models are not preference-conditioned; evaluate on the training weights",
                ));
            }
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes", "must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must list at least one seed"));
        }
        if let Some(r) = &self.reference {
            if r.len() != n {
                return Err(Error::config(
                    "reference",
                    format!("length {} but the environment has {n} objectives", r.len()),
                ));
            }
        }
        if self.hypervolume.samples == 0 {
            return Err(Error::config("hypervolume.samples", "must be at least 1"));
        }
        self.ppo.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
algorithm = "moc"
train_preferences = [[0.1, 0.9], [0.9, 0.1]]

[env]
name = "fishwood"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.eval_episodes, 20);
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.ppo, PpoConfig::default());
        assert_eq!(cfg.eval_preferences(), &cfg.train_preferences);
        assert_eq!(cfg.reference(), vec![0.0, 0.0]);
        assert_eq!(cfg.eval_mode, ActionMode::Stochastic);
    }

    #[test]
    fn toml_roundtrip() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.seeds = vec![3, 4];
        cfg.ppo.phi = 0.2;
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn field_errors_name_the_field() {
        let bad = MINIMAL.replace("[[0.1, 0.9], [0.9, 0.1]]", "[[0.2, 0.3, 0.5]]");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("train_preferences"), "{err}");

        let bad = format!("eval_episodes = 0\n{MINIMAL}");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("eval_episodes"), "{err}");

        let bad = format!("{MINIMAL}\n[ppo]\ngamma = 1.5\n");
        let err = ExperimentConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("ppo.gamma"), "{err}");

        let bad = MINIMAL.replace("\"moc\"", "\"sac\"");
        assert!(ExperimentConfig::from_toml(&bad).is_err());

        let bad = MINIMAL.replace("[0.1, 0.9]", "[0.2, 0.9]");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn linear_ppo_rejects_other_eval_set() {
        let text = format!("eval_preferences = [[0.5, 0.5]]\n{}", MINIMAL.replace("\"moc\"", "\"linear-ppo\""));
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn algorithm_names_roundtrip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("ppo".parse::<Algorithm>().is_err());
    }
}
