//! Preference-conditioned categorical policy, batched rollouts and evaluation.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::preference::{PreferenceSet, PreferenceVector};
use crate::env::{MultiObjectiveEnv, SimRng};
use crate::error::{Error, Result};
use crate::metrics::{SolutionPoint, SolutionSet};
use crate::numerics::{argmax, categorical_sample, log_softmax, Mlp};
use crate::par::par_map_range;

/// Policy network plus the metadata needed to build its inputs.
///
/// A conditioned policy sees `state ++ p`; an unconditioned one sees `state` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferencePolicy {
    pub net: Mlp,
    pub state_dim: usize,
    pub n_objectives: usize,
    pub n_actions: usize,
    pub conditioned: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ActionMode {
    #[default]
    Stochastic,
    Greedy,
}

impl PreferencePolicy {
    pub fn input_dim(state_dim: usize, n_objectives: usize, conditioned: bool) -> usize {
        if conditioned {
            state_dim + n_objectives
        } else {
            state_dim
        }
    }

    pub fn write_input(&self, state: &[f64], pref: &PreferenceVector, out: &mut Vec<f64>) {
        out.extend_from_slice(state);
        if self.conditioned {
            out.extend_from_slice(pref.as_slice());
        }
    }

    pub fn logits(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.net.forward_batch(inputs)
    }

    pub fn save_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn load_json(text: &str) -> Result<Self> {
        let policy: Self = serde_json::from_str(text)?;
        let expected = Self::input_dim(policy.state_dim, policy.n_objectives, policy.conditioned);
        Error::check_len("policy input width", expected, policy.net.input_dim())?;
        Error::check_len("policy output width", policy.n_actions, policy.net.output_dim())?;
        Ok(policy)
    }
}

/// One finished episode as seen by the learner.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub pref_index: usize,
    /// `T x input_dim` policy inputs.
    pub inputs: Array2<f64>,
    pub actions: Vec<usize>,
    /// `T x n_actions` behaviour log-probabilities.
    pub logprobs: Array2<f64>,
    /// `T x N` raw rewards.
    pub rewards: Array2<f64>,
}

impl EpisodeRecord {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn raw_return(&self) -> Vec<f64> {
        self.rewards.sum_axis(ndarray::Axis(0)).to_vec()
    }
}

/// Runs one episode per entry of `pref_indices` in lockstep, batching the
/// policy forward pass across episodes. All randomness comes from `rng`,
/// consumed in episode order at every step.
pub fn rollout<E: MultiObjectiveEnv>(
    env: &E,
    policy: &PreferencePolicy,
    prefs: &PreferenceSet,
    pref_indices: &[usize],
    mode: ActionMode,
    explore_epsilon: f64,
    rng: &mut SimRng,
) -> Result<Vec<EpisodeRecord>> {
    Error::check_len("policy objectives", env.n_objectives(), policy.n_objectives)?;
    Error::check_len("policy state", env.state_dim(), policy.state_dim)?;
    Error::check_len("policy actions", env.n_actions(), policy.n_actions)?;
    Error::check_len("preference dimension", env.n_objectives(), prefs.dim())?;
    let n_ep = pref_indices.len();
    let in_dim = policy.net.input_dim();
    let n_obj = env.n_objectives();
    let n_act = env.n_actions();

    let mut envs: Vec<E> = vec![env.clone(); n_ep];
    let mut states: Vec<Vec<f64>> = envs.iter_mut().map(|e| e.reset().state).collect();
    let mut active: Vec<usize> = (0..n_ep).collect();
    let mut inputs: Vec<Vec<f64>> = vec![Vec::new(); n_ep];
    let mut actions: Vec<Vec<usize>> = vec![Vec::new(); n_ep];
    let mut logprobs: Vec<Vec<f64>> = vec![Vec::new(); n_ep];
    let mut rewards: Vec<Vec<f64>> = vec![Vec::new(); n_ep];

    let mut row = Vec::with_capacity(in_dim);
    let mut step = 0usize;
    while !active.is_empty() {
        if step > env.horizon() {
            return Err(Error::InvalidInput(format!(
                "episode exceeded declared horizon {}",
                env.horizon()
            )));
        }
        let mut batch = Array2::zeros((active.len(), in_dim));
        for (r, &e) in active.iter().enumerate() {
            row.clear();
            policy.write_input(&states[e], prefs.get(pref_indices[e]), &mut row);
            batch.row_mut(r).assign(&ndarray::ArrayView1::from(&row[..]));
        }
        let logits = policy.logits(batch.view())?;
        let mut still = Vec::with_capacity(active.len());
        for (r, &e) in active.iter().enumerate() {
            let l = logits.row(r).to_vec();
            let action = if explore_epsilon > 0.0 && rng.random::<f64>() < explore_epsilon {
                rng.random_range(0..n_act)
            } else {
                match mode {
                    ActionMode::Stochastic => categorical_sample(&l, rng)?,
                    ActionMode::Greedy => argmax(&l)?,
                }
            };
            let obs = envs[e].step(action, rng)?;
            inputs[e].extend(batch.row(r).iter());
            actions[e].push(action);
            logprobs[e].extend(log_softmax(&l));
            rewards[e].extend_from_slice(&obs.reward);
            states[e] = obs.state;
            if !obs.done {
                still.push(e);
            }
        }
        active = still;
        step += 1;
    }

    (0..n_ep)
        .map(|e| {
            let t = actions[e].len();
            Ok(EpisodeRecord {
                pref_index: pref_indices[e],
                inputs: Array2::from_shape_vec((t, in_dim), std::mem::take(&mut inputs[e]))
                    .expect("row-major episode inputs"),
                actions: std::mem::take(&mut actions[e]),
                logprobs: Array2::from_shape_vec((t, n_act), std::mem::take(&mut logprobs[e]))
                    .expect("row-major log-probs"),
                rewards: Array2::from_shape_vec((t, n_obj), std::mem::take(&mut rewards[e]))
                    .expect("row-major rewards"),
            })
        })
        .collect()
}

/// Mean and population std of raw episodic returns per preference, from a frozen
/// policy. Preference `i` draws from its own ChaCha stream `i` of `seed`, so
/// the result does not depend on how preferences are spread over threads.
pub fn evaluate_policy<E: MultiObjectiveEnv>(
    env: &E,
    policy: &PreferencePolicy,
    prefs: &PreferenceSet,
    episodes: usize,
    mode: ActionMode,
    seed: u64,
) -> Result<SolutionSet> {
    if episodes == 0 {
        return Err(Error::config("eval_episodes", "must be at least 1"));
    }
    let points = par_map_range(prefs.len(), |i| -> Result<SolutionPoint> {
        let mut rng = SimRng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let single = PreferenceSet::new(vec![prefs.get(i).clone()])?;
        let records = rollout(env, policy, &single, &vec![0; episodes], mode, 0.0, &mut rng)?;
        let returns: Vec<Vec<f64>> = records.iter().map(EpisodeRecord::raw_return).collect();
        Ok(SolutionPoint::from_returns(prefs.get(i).clone(), &returns))
    });
    SolutionSet::new(points.into_iter().collect::<Result<_>>()?)
}
