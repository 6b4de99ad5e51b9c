//! PPO training loops: the preference-conditioned controllable learner, its
//! single-term ablations, and the linear-scalarization baseline.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::gae::{gae_advantages, lambda_returns, standardize};
use super::normalize::{mse, RunningNorm};
use super::policy::{rollout, ActionMode, EpisodeRecord, PreferencePolicy};
use super::preference::{PreferenceSet, PreferenceVector};
use super::surrogate::{
    moc_weights, objective_coefficients, scalarized_policy_loss, value_loss, EpisodeSignals,
    LossCoefficients, MinNormWeights, PolicyBatch,
};
use crate::env::{MultiObjectiveEnv, SimRng};
use crate::error::{Error, Result};
use crate::numerics::{log_softmax, Adam, AdamConfig, Mlp};

/// Which return vector the alignment term compares against the preference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentTarget {
    /// Each episode's own normalized return.
    #[default]
    Episode,
    /// Mean normalized return of the episode's preference group in the batch.
    GroupMean,
}

/// How each episode's `(c1, c2)` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Closed-form min-norm balance of both terms.
    #[default]
    MinNorm,
    /// Always `(1, 0)`: preference-weighted return only.
    ObjectiveOnly,
    /// Always `(0, 1)`: alignment penalty only.
    ConstraintOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lam: f64,
    pub clip_eps: f64,
    pub epochs: usize,
    pub lr: f64,
    /// Episodes collected per iteration.
    pub batch_episodes: usize,
    /// Samples (time steps) per gradient step.
    pub minibatch_size: usize,
    pub kl_coef: f64,
    pub vf_coef: f64,
    pub ent_coef: f64,
    /// Alignment threshold on the mean squared error.
    pub phi: f64,
    /// Environment-step budget for the whole run.
    pub total_steps: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    /// Probability of replacing the sampled action with a uniform one.
    pub explore_epsilon: f64,
    /// Scale applied to the freshly initialized policy output layer.
    pub policy_init_scale: f64,
    pub alignment_target: AlignmentTarget,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lam: 0.95,
            clip_eps: 0.2,
            epochs: 3,
            lr: 1e-4,
            batch_episodes: 10,
            minibatch_size: 512,
            kl_coef: 0.0,
            vf_coef: 0.5,
            ent_coef: 0.001,
            phi: 0.05,
            total_steps: 200_000,
            hidden_layers: 3,
            hidden_width: 256,
            explore_epsilon: 0.0,
            policy_init_scale: 0.01,
            alignment_target: AlignmentTarget::Episode,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, reason: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("ppo.{field}"), reason))
            }
        };
        check(self.gamma > 0.0 && self.gamma <= 1.0, "gamma", "must lie in (0, 1]")?;
        check((0.0..=1.0).contains(&self.lam), "lam", "must lie in [0, 1]")?;
        check(self.clip_eps > 0.0, "clip_eps", "must be positive")?;
        check(self.phi >= 0.0, "phi", "must be non-negative")?;
        check(self.epochs >= 1, "epochs", "must be at least 1")?;
        check(self.lr > 0.0 && self.lr.is_finite(), "lr", "must be positive")?;
        check(self.batch_episodes >= 1, "batch_episodes", "must be at least 1")?;
        check(self.minibatch_size >= 1, "minibatch_size", "must be at least 1")?;
        check(self.kl_coef >= 0.0, "kl_coef", "must be non-negative")?;
        check(self.vf_coef > 0.0, "vf_coef", "must be positive")?;
        check(self.ent_coef >= 0.0, "ent_coef", "must be non-negative")?;
        check(self.total_steps >= 1, "total_steps", "must be at least 1")?;
        check(self.hidden_width >= 1, "hidden_width", "must be at least 1")?;
        check(
            (0.0..=1.0).contains(&self.explore_epsilon),
            "explore_epsilon",
            "must lie in [0, 1]",
        )?;
        check(self.policy_init_scale > 0.0, "policy_init_scale", "must be positive")?;
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }

    fn loss_coefficients(&self) -> LossCoefficients {
        LossCoefficients {
            clip_eps: self.clip_eps,
            entropy: self.ent_coef,
            kl: self.kl_coef,
        }
    }
}

/// Mean returns of one preference group within an iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub episodes: usize,
    pub raw_return: Vec<f64>,
    pub normalized_return: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub env_steps: usize,
    /// Indexed like the training preference set; `None` when unsampled.
    pub groups: Vec<Option<GroupStats>>,
    pub mean_c1: f64,
    pub mean_c2: f64,
    pub violation_rate: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub preferences: PreferenceSet,
    pub n_objectives: usize,
    /// Width of the training signal (N for conditioned runs, 1 for linear PPO).
    pub n_train_objectives: usize,
    pub records: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: PreferencePolicy,
    pub log: TrainLog,
}

/// Trains one preference-conditioned policy over `prefs`.
pub fn moc_train<E: MultiObjectiveEnv>(
    env: &E,
    prefs: &PreferenceSet,
    cfg: &PpoConfig,
    mode: WeightMode,
    seed: u64,
) -> Result<TrainOutcome> {
    if prefs.dim() != env.n_objectives() {
        return Err(Error::config(
            "train_preferences",
            format!(
                "preference length {} differs from objective count {}",
                prefs.dim(),
                env.n_objectives()
            ),
        ));
    }
    Trainer::new(env, prefs.clone(), None, cfg, mode, seed)?.run()
}

/// Single-objective PPO on the scalar reward `w . r`; the policy never sees `w`.
pub fn linear_ppo_train<E: MultiObjectiveEnv>(
    env: &E,
    weight: &PreferenceVector,
    cfg: &PpoConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    if weight.len() != env.n_objectives() {
        return Err(Error::config(
            "train_preferences",
            format!(
                "weight length {} differs from objective count {}",
                weight.len(),
                env.n_objectives()
            ),
        ));
    }
    let prefs = PreferenceSet::new(vec![weight.clone()])?;
    Trainer::new(
        env,
        prefs,
        Some(weight.clone()),
        cfg,
        WeightMode::ObjectiveOnly,
        seed,
    )?
    .run()
}

struct Trainer<'a, E> {
    env: &'a E,
    prefs: PreferenceSet,
    /// Linear-PPO scalarization weight; `None` for conditioned training.
    scalarize: Option<PreferenceVector>,
    /// Preferences in training-signal space (the scalarized run uses `[1]`).
    train_prefs: PreferenceSet,
    cfg: PpoConfig,
    mode: WeightMode,
    rng: SimRng,
    policy: PreferencePolicy,
    value: Mlp,
    policy_opt: Adam,
    value_opt: Adam,
    reward_norm: RunningNorm,
    return_norm: RunningNorm,
}

/// Flattened learner view of one iteration's episodes.
struct Batch {
    inputs: Array2<f64>,
    actions: Vec<usize>,
    old_logprobs: Array2<f64>,
    advantages: Array2<f64>,
    returns: Array2<f64>,
    /// `[start, end)` sample range of each episode.
    spans: Vec<(usize, usize)>,
    episode_prefs: Vec<usize>,
    /// Normalized episodic training returns, one row per episode.
    norm_returns: Array2<f64>,
    raw_returns: Vec<Vec<f64>>,
}

impl<'a, E: MultiObjectiveEnv> Trainer<'a, E> {
    fn new(
        env: &'a E,
        prefs: PreferenceSet,
        scalarize: Option<PreferenceVector>,
        cfg: &PpoConfig,
        mode: WeightMode,
        seed: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        let mut rng = SimRng::seed_from_u64(seed);
        let conditioned = scalarize.is_none();
        let n_obj = env.n_objectives();
        let k = if conditioned { n_obj } else { 1 };
        let train_prefs = if conditioned {
            prefs.clone()
        } else {
            PreferenceSet::new(vec![PreferenceVector::new(vec![1.0])?])?
        };
        let in_dim = PreferencePolicy::input_dim(env.state_dim(), n_obj, conditioned);
        let mut net = Mlp::with_hidden(in_dim, cfg.hidden_layers, cfg.hidden_width, env.n_actions(), &mut rng)?;
        net.scale_output_layer(cfg.policy_init_scale);
        let value = Mlp::with_hidden(in_dim, cfg.hidden_layers, cfg.hidden_width, k, &mut rng)?;
        let policy = PreferencePolicy {
            net,
            state_dim: env.state_dim(),
            n_objectives: n_obj,
            n_actions: env.n_actions(),
            conditioned,
        };
        Ok(Self {
            env,
            policy_opt: Adam::new(cfg.adam(), &policy.net),
            value_opt: Adam::new(cfg.adam(), &value),
            prefs,
            scalarize,
            train_prefs,
            cfg: cfg.clone(),
            mode,
            rng,
            policy,
            value,
            reward_norm: RunningNorm::new(k),
            return_norm: RunningNorm::new(k),
        })
    }

    fn run(mut self) -> Result<TrainOutcome> {
        let per_iter = self.cfg.batch_episodes * self.env.horizon().max(1);
        let iterations = self.cfg.total_steps.div_ceil(per_iter).max(1);
        let mut records = Vec::with_capacity(iterations);
        let mut env_steps = 0;
        for iteration in 0..iterations {
            let record = self.iterate(iteration, &mut env_steps)?;
            records.push(record);
        }
        let log = TrainLog {
            preferences: self.prefs.clone(),
            n_objectives: self.env.n_objectives(),
            n_train_objectives: self.train_prefs.dim(),
            records,
        };
        Ok(TrainOutcome {
            policy: self.policy,
            log,
        })
    }

    fn training_rewards(&self, raw: &Array2<f64>) -> Array2<f64> {
        match &self.scalarize {
            None => raw.clone(),
            Some(w) => {
                let w = ndarray::ArrayView1::from(w.as_slice());
                raw.dot(&w).insert_axis(Axis(1))
            }
        }
    }

    fn collect(&mut self) -> Result<(Vec<EpisodeRecord>, Batch)> {
        let n_prefs = self.prefs.len();
        let pref_indices: Vec<usize> = (0..self.cfg.batch_episodes)
            .map(|_| self.rng.random_range(0..n_prefs))
            .collect();
        let episodes = rollout(
            self.env,
            &self.policy,
            &self.prefs,
            &pref_indices,
            ActionMode::Stochastic,
            self.cfg.explore_epsilon,
            &mut self.rng,
        )?;

        let k = self.train_prefs.dim();
        let train_rewards: Vec<Array2<f64>> = episodes
            .iter()
            .map(|ep| self.training_rewards(&ep.rewards))
            .collect();

        // Per-step reward normalization (statistics folded in before use).
        for r in &train_rewards {
            for row in r.outer_iter() {
                self.reward_norm.update(row.as_slice().expect("contiguous"))?;
            }
        }
        // Episodic return normalization for the alignment term.
        let ep_returns: Vec<Vec<f64>> = train_rewards
            .iter()
            .map(|r| r.sum_axis(Axis(0)).to_vec())
            .collect();
        for r in &ep_returns {
            self.return_norm.update(r)?;
        }
        let mut norm_returns = Array2::zeros((episodes.len(), k));
        for (e, r) in ep_returns.iter().enumerate() {
            let n = self.return_norm.apply(r)?;
            norm_returns.row_mut(e).assign(&ndarray::ArrayView1::from(&n[..]));
        }

        let total: usize = episodes.iter().map(EpisodeRecord::len).sum();
        let in_dim = self.policy.net.input_dim();
        let n_act = self.policy.n_actions;
        let mut inputs = Array2::zeros((total, in_dim));
        let mut old_logprobs = Array2::zeros((total, n_act));
        let mut actions = Vec::with_capacity(total);
        let mut spans = Vec::with_capacity(episodes.len());
        let mut start = 0;
        for ep in &episodes {
            let end = start + ep.len();
            inputs.slice_mut(ndarray::s![start..end, ..]).assign(&ep.inputs);
            old_logprobs.slice_mut(ndarray::s![start..end, ..]).assign(&ep.logprobs);
            actions.extend_from_slice(&ep.actions);
            spans.push((start, end));
            start = end;
        }

        let values = self.value.forward_batch(inputs.view())?;
        let mut advantages = Array2::zeros((total, k));
        let mut returns = Array2::zeros((total, k));
        for (e, &(s, t)) in spans.iter().enumerate() {
            let norm_r: Vec<Vec<f64>> = train_rewards[e]
                .outer_iter()
                .map(|row| self.reward_norm.apply(row.as_slice().expect("contiguous")))
                .collect::<Result<_>>()?;
            for j in 0..k {
                let r: Vec<f64> = norm_r.iter().map(|row| row[j]).collect();
                let v: Vec<f64> = values.slice(ndarray::s![s..t, j]).to_vec();
                let adv = gae_advantages(&r, &v, 0.0, self.cfg.gamma, self.cfg.lam)?;
                let ret = lambda_returns(&adv, &v);
                for (i, (a, g)) in adv.iter().zip(&ret).enumerate() {
                    advantages[[s + i, j]] = *a;
                    returns[[s + i, j]] = *g;
                }
            }
        }
        for mut col in advantages.columns_mut() {
            let mut c = col.to_vec();
            standardize(&mut c);
            col.assign(&ndarray::ArrayView1::from(&c[..]));
        }

        let batch = Batch {
            inputs,
            actions,
            old_logprobs,
            advantages,
            returns,
            spans,
            episode_prefs: pref_indices,
            norm_returns,
            raw_returns: episodes.iter().map(EpisodeRecord::raw_return).collect(),
        };
        Ok((episodes, batch))
    }

    /// Per-group mean normalized return, its violation flag, and group stats.
    fn group_summary(&self, batch: &Batch) -> Result<(Vec<Option<GroupStats>>, Vec<bool>)> {
        let n_prefs = self.prefs.len();
        let k = self.train_prefs.dim();
        let mut groups: Vec<Option<GroupStats>> = vec![None; n_prefs];
        for (e, &g) in batch.episode_prefs.iter().enumerate() {
            let entry = groups[g].get_or_insert_with(|| GroupStats {
                episodes: 0,
                raw_return: vec![0.0; self.env.n_objectives()],
                normalized_return: vec![0.0; k],
            });
            entry.episodes += 1;
            for (a, b) in entry.raw_return.iter_mut().zip(&batch.raw_returns[e]) {
                *a += b;
            }
            for (a, b) in entry.normalized_return.iter_mut().zip(batch.norm_returns.row(e)) {
                *a += b;
            }
        }
        let mut violated = vec![false; n_prefs];
        for (g, entry) in groups.iter_mut().enumerate() {
            if let Some(s) = entry {
                let n = s.episodes as f64;
                s.raw_return.iter_mut().for_each(|v| *v /= n);
                s.normalized_return.iter_mut().for_each(|v| *v /= n);
                let p = self.train_prefs.get(if self.scalarize.is_some() { 0 } else { g });
                violated[g] = mse(&s.normalized_return, p.as_slice())? > self.cfg.phi;
            }
        }
        Ok((groups, violated))
    }

    fn episode_weights(
        &self,
        batch: &Batch,
        groups: &[Option<GroupStats>],
        violated: &[bool],
        ratios: &[f64],
    ) -> Result<(Array2<f64>, Vec<MinNormWeights>)> {
        let k = self.train_prefs.dim();
        let mut coefficients = Array2::zeros((batch.actions.len(), k));
        let mut weights = Vec::with_capacity(batch.spans.len());
        for (e, &(s, t)) in batch.spans.iter().enumerate() {
            let g = batch.episode_prefs[e];
            let p = self.train_prefs.get(if self.scalarize.is_some() { 0 } else { g });
            // Linear PPO has no alignment term.
            let flag = self.scalarize.is_none() && violated[g];
            let aligned: Vec<f64> = match self.cfg.alignment_target {
                AlignmentTarget::Episode => batch.norm_returns.row(e).to_vec(),
                AlignmentTarget::GroupMean => groups[g]
                    .as_ref()
                    .expect("sampled group has stats")
                    .normalized_return
                    .clone(),
            };
            let w = match self.mode {
                WeightMode::MinNorm => {
                    let signals = EpisodeSignals {
                        advantages: batch.advantages.slice(ndarray::s![s..t, ..]),
                        ratios: &ratios[s..t],
                        aligned_return: &aligned,
                    };
                    moc_weights(&signals, p, flag, self.cfg.clip_eps)?
                }
                WeightMode::ObjectiveOnly => MinNormWeights::OBJECTIVE_ONLY,
                WeightMode::ConstraintOnly => MinNormWeights::CONSTRAINT_ONLY,
            };
            let coef = objective_coefficients(p, &aligned, flag, w)?;
            for mut row in coefficients.slice_mut(ndarray::s![s..t, ..]).outer_iter_mut() {
                row.assign(&ndarray::ArrayView1::from(&coef[..]));
            }
            weights.push(w);
        }
        Ok((coefficients, weights))
    }

    fn current_ratios(&self, batch: &Batch) -> Result<Vec<f64>> {
        let logits = self.policy.logits(batch.inputs.view())?;
        Ok(logits
            .outer_iter()
            .enumerate()
            .map(|(i, l)| {
                let a = batch.actions[i];
                let lp = log_softmax(l.as_slice().expect("contiguous"))[a];
                (lp - batch.old_logprobs[[i, a]]).exp()
            })
            .collect())
    }

    fn iterate(&mut self, iteration: usize, env_steps: &mut usize) -> Result<IterationRecord> {
        let (_, batch) = self.collect()?;
        let n = batch.actions.len();
        *env_steps += n;
        let (groups, violated) = self.group_summary(&batch)?;

        let coef = self.cfg.loss_coefficients();
        let mut order: Vec<usize> = (0..n).collect();
        let (mut c1_sum, mut c2_sum, mut weight_count) = (0.0, 0.0, 0usize);
        let (mut pl_sum, mut vl_sum, mut ent_sum, mut steps) = (0.0, 0.0, 0.0, 0usize);
        let diverged = |reason: String| Error::Divergence { iteration, reason };

        for epoch in 0..self.cfg.epochs {
            // The policy equals the behaviour policy before the first epoch.
            let ratios = if epoch == 0 || self.mode != WeightMode::MinNorm {
                vec![1.0; n]
            } else {
                self.current_ratios(&batch)?
            };
            let (coefficients, weights) = self.episode_weights(&batch, &groups, &violated, &ratios)?;
            for w in &weights {
                c1_sum += w.c1;
                c2_sum += w.c2;
            }
            weight_count += weights.len();

            order.shuffle(&mut self.rng);
            for chunk in order.chunks(self.cfg.minibatch_size) {
                let inputs = batch.inputs.select(Axis(0), chunk);
                let actions: Vec<usize> = chunk.iter().map(|&i| batch.actions[i]).collect();
                let old = batch.old_logprobs.select(Axis(0), chunk);
                let adv = batch.advantages.select(Axis(0), chunk);
                let cf = coefficients.select(Axis(0), chunk);

                let cache = self.policy.net.forward_cached(inputs.view())?;
                let loss = scalarized_policy_loss(
                    &PolicyBatch {
                        logits: cache.output().view(),
                        actions: &actions,
                        old_logprobs: old.view(),
                        advantages: adv.view(),
                        coefficients: cf.view(),
                    },
                    &coef,
                )
                .map_err(|e| diverged(e.to_string()))?;
                let grads = self.policy.net.backward(&cache, loss.dlogits.view())?;
                self.policy_opt
                    .step(&mut self.policy.net, &grads)
                    .map_err(|e| diverged(format!("policy update: {e}")))?;

                let targets = batch.returns.select(Axis(0), chunk);
                let vcache = self.value.forward_cached(inputs.view())?;
                let (vloss, dv) = value_loss(vcache.output().view(), targets.view(), self.cfg.vf_coef)
                    .map_err(|e| diverged(e.to_string()))?;
                let vgrads = self.value.backward(&vcache, dv.view())?;
                self.value_opt
                    .step(&mut self.value, &vgrads)
                    .map_err(|e| diverged(format!("value update: {e}")))?;

                pl_sum += loss.loss;
                vl_sum += vloss;
                ent_sum += loss.entropy;
                steps += 1;
            }
        }
        if !self.policy.net.is_finite() || !self.value.is_finite() {
            return Err(diverged("non-finite parameters".into()));
        }

        let sampled: Vec<bool> = groups.iter().map(Option::is_some).collect();
        let n_sampled = sampled.iter().filter(|&&s| s).count().max(1);
        let violation_rate = violated.iter().filter(|&&v| v).count() as f64 / n_sampled as f64;
        let steps_f = steps.max(1) as f64;
        let wc = weight_count.max(1) as f64;
        Ok(IterationRecord {
            iteration,
            env_steps: *env_steps,
            groups,
            mean_c1: c1_sum / wc,
            mean_c2: c2_sum / wc,
            violation_rate,
            policy_loss: pl_sum / steps_f,
            value_loss: vl_sum / steps_f,
            entropy: ent_sum / steps_f,
        })
    }
}
