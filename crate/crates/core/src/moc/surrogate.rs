//! Controllability weighting and the scalarized clipped objective.
//!
//! Each episode gets a pair `(c1, c2)` balancing the preference-weighted return
//! objective against the hinge alignment penalty. The pair comes from a
//! two-vector min-norm problem over per-step vectors built from the
//! clip-gated advantages, so no extra backward pass is needed to choose it.
//! The episode's objectives are then folded into per-objective coefficients
//! `w_j = c1 * p_j - c2 * [violated] * (R_j - p_j)` applied to the
//! per-objective clipped surrogates.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::preference::PreferenceVector;
use crate::error::{Error, Result};
use crate::numerics::{entropy, log_softmax};

/// Convex pair `(c1, c2)` with `c1 + c2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinNormWeights {
    pub c1: f64,
    pub c2: f64,
}

impl MinNormWeights {
    /// Pure return objective.
    pub const OBJECTIVE_ONLY: Self = Self { c1: 1.0, c2: 0.0 };
    /// Pure alignment penalty.
    pub const CONSTRAINT_ONLY: Self = Self { c1: 0.0, c2: 1.0 };

    pub fn from_c1(c: f64) -> Self {
        let c1 = c.clamp(0.0, 1.0);
        Self { c1, c2: 1.0 - c1 }
    }
}

/// Advantage passed through by the PPO clip: zero where the clipped
/// surrogate has no gradient, otherwise the advantage itself.
pub fn clip_indicator(a: f64, z: f64, eps: f64) -> f64 {
    if (a > 0.0 && z > 1.0 + eps) || (a < 0.0 && z < 1.0 - eps) {
        0.0
    } else {
        a
    }
}

/// `min(z a, clip(z, 1 - eps, 1 + eps) a)`.
pub fn clipped_surrogate(z: f64, a: f64, eps: f64) -> f64 {
    (z * a).min(z.clamp(1.0 - eps, 1.0 + eps) * a)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Closed-form `argmin_{c in [0,1]} |c u1 + (1 - c) u2|^2`, returned as `(c, 1 - c)`.
pub fn min_norm_2(u1: &[f64], u2: &[f64]) -> Result<MinNormWeights> {
    Error::check_len("min-norm operands", u1.len(), u2.len())?;
    let g12 = dot(u1, u2);
    let g11 = dot(u1, u1);
    let g22 = dot(u2, u2);
    let c = if g12 >= g11 {
        1.0
    } else if g12 >= g22 {
        0.0
    } else {
        let diff_sq: f64 = u1.iter().zip(u2).map(|(a, b)| (a - b).powi(2)).sum();
        let num: f64 = u1.iter().zip(u2).map(|(a, b)| (b - a) * b).sum();
        num / diff_sq
    };
    Ok(MinNormWeights::from_c1(c))
}

/// One episode's data for the weighting step.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeSignals<'a> {
    /// `T x N` advantages.
    pub advantages: ArrayView2<'a, f64>,
    /// Current-to-behaviour probability ratios, one per step.
    pub ratios: &'a [f64],
    /// Normalized return vector compared against the preference.
    pub aligned_return: &'a [f64],
}

/// Per-step vectors `v_t = sum_j p_j I(A_jt)` and
/// `vbar_t = [violated] sum_j (R_j - p_j) I(A_jt)`.
pub fn moc_vectors(
    episode: &EpisodeSignals<'_>,
    p: &PreferenceVector,
    violated: bool,
    eps: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (steps, n) = episode.advantages.dim();
    Error::check_len("episode objectives", p.len(), n)?;
    Error::check_len("episode ratios", steps, episode.ratios.len())?;
    Error::check_len("aligned return", n, episode.aligned_return.len())?;
    let mut v = vec![0.0; steps];
    let mut vbar = vec![0.0; steps];
    for (t, row) in episode.advantages.outer_iter().enumerate() {
        let z = episode.ratios[t];
        for (j, &a) in row.iter().enumerate() {
            let gated = clip_indicator(a, z, eps);
            v[t] += p.get(j) * gated;
            if violated {
                vbar[t] += (episode.aligned_return[j] - p.get(j)) * gated;
            }
        }
    }
    Ok((v, vbar))
}

/// Solves for the episode's `(c1, c2)`. The objective combines as
/// `c1 v - c2 vbar`, so the solver sees `(v, -vbar)`. A zero `vbar`
/// (satisfied constraint) short-circuits to `(1, 0)`.
pub fn moc_weights(
    episode: &EpisodeSignals<'_>,
    p: &PreferenceVector,
    violated: bool,
    eps: f64,
) -> Result<MinNormWeights> {
    if !violated {
        return Ok(MinNormWeights::OBJECTIVE_ONLY);
    }
    let (v, vbar) = moc_vectors(episode, p, violated, eps)?;
    if vbar.iter().all(|&x| x == 0.0) {
        return Ok(MinNormWeights::OBJECTIVE_ONLY);
    }
    let neg: Vec<f64> = vbar.iter().map(|x| -x).collect();
    min_norm_2(&v, &neg)
}

/// `w_j = c1 p_j - c2 [violated] (R_j - p_j)`.
pub fn objective_coefficients(
    p: &PreferenceVector,
    aligned_return: &[f64],
    violated: bool,
    weights: MinNormWeights,
) -> Result<Vec<f64>> {
    Error::check_len("aligned return", p.len(), aligned_return.len())?;
    Ok(p.as_slice()
        .iter()
        .zip(aligned_return)
        .map(|(&pj, &rj)| {
            let penalty = if violated { rj - pj } else { 0.0 };
            weights.c1 * pj - weights.c2 * penalty
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossCoefficients {
    pub clip_eps: f64,
    pub entropy: f64,
    pub kl: f64,
}

/// A minibatch of policy samples. Rows are samples.
#[derive(Debug, Clone, Copy)]
pub struct PolicyBatch<'a> {
    /// Current-policy logits, `B x A`.
    pub logits: ArrayView2<'a, f64>,
    pub actions: &'a [usize],
    /// Behaviour-policy log-probabilities of every action, `B x A`.
    pub old_logprobs: ArrayView2<'a, f64>,
    /// `B x N` advantages.
    pub advantages: ArrayView2<'a, f64>,
    /// `B x N` per-objective coefficients (`w_j` of the sample's episode).
    pub coefficients: ArrayView2<'a, f64>,
}

#[derive(Debug, Clone)]
pub struct PolicyLoss {
    /// Mean over samples of `sum_j w_j L_clip_j`.
    pub surrogate: f64,
    pub entropy: f64,
    /// Mean `KL(pi || pi_old)`.
    pub kl: f64,
    /// `-surrogate - c_ent * entropy + beta * kl`, minimized.
    pub loss: f64,
    /// Gradient of `loss` with respect to the logits, `B x A`.
    pub dlogits: Array2<f64>,
}

pub fn scalarized_policy_loss(batch: &PolicyBatch<'_>, coef: &LossCoefficients) -> Result<PolicyLoss> {
    let (b, n_actions) = batch.logits.dim();
    Error::check_len("policy batch actions", b, batch.actions.len())?;
    Error::check_len("policy batch old log-probs", b, batch.old_logprobs.nrows())?;
    Error::check_len("policy batch old log-probs", n_actions, batch.old_logprobs.ncols())?;
    Error::check_len("policy batch advantages", b, batch.advantages.nrows())?;
    Error::check_len("policy batch coefficients", b, batch.coefficients.nrows())?;
    Error::check_len(
        "policy batch coefficients",
        batch.advantages.ncols(),
        batch.coefficients.ncols(),
    )?;
    if b == 0 {
        return Err(Error::InvalidInput("empty policy batch".into()));
    }
    let inv_b = 1.0 / b as f64;
    let mut dlogits = Array2::zeros((b, n_actions));
    let (mut surrogate, mut ent_sum, mut kl_sum) = (0.0, 0.0, 0.0);

    for i in 0..b {
        let logits = batch.logits.row(i).to_vec();
        let action = batch.actions[i];
        if action >= n_actions {
            return Err(Error::InvalidAction { action, n_actions });
        }
        let lp = log_softmax(&logits);
        let probs: Vec<f64> = lp.iter().map(|l| l.exp()).collect();
        let old = batch.old_logprobs.row(i);
        let z = (lp[action] - old[action]).exp();

        // d surrogate / d log pi(a) = z * sum_j w_j I(A_j).
        let mut dsur_dlp = 0.0;
        for (&a, &w) in batch.advantages.row(i).iter().zip(batch.coefficients.row(i)) {
            surrogate += w * clipped_surrogate(z, a, coef.clip_eps);
            dsur_dlp += w * z * clip_indicator(a, z, coef.clip_eps);
        }

        let h = entropy(&logits);
        ent_sum += h;
        let kl: f64 = (0..n_actions)
            .filter(|&k| probs[k] > 0.0)
            .map(|k| probs[k] * (lp[k] - old[k]))
            .sum();
        kl_sum += kl;

        let mut row = dlogits.row_mut(i);
        for k in 0..n_actions {
            let onehot = if k == action { 1.0 } else { 0.0 };
            let dlp = onehot - probs[k];
            let log_pk = if probs[k] > 0.0 { lp[k] } else { 0.0 };
            let dent = -probs[k] * (log_pk + h);
            let dkl = probs[k] * ((lp[k] - old[k]) - kl);
            row[k] = inv_b * (-dsur_dlp * dlp - coef.entropy * dent + coef.kl * dkl);
        }
    }

    let surrogate = surrogate * inv_b;
    let entropy = ent_sum * inv_b;
    let kl = kl_sum * inv_b;
    let loss = -surrogate - coef.entropy * entropy + coef.kl * kl;
    if !loss.is_finite() {
        return Err(Error::NonFinite("policy loss".into()));
    }
    Ok(PolicyLoss {
        surrogate,
        entropy,
        kl,
        loss,
        dlogits,
    })
}

/// `coef * mean_b sum_j (V_j - target_j)^2` and its gradient in the values.
pub fn value_loss(values: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>, coef: f64) -> Result<(f64, Array2<f64>)> {
    if values.dim() != targets.dim() {
        return Err(Error::DimensionMismatch {
            context: "value targets",
            expected: values.len(),
            actual: targets.len(),
        });
    }
    let b = values.nrows().max(1) as f64;
    let diff = &values - &targets;
    let loss = coef * diff.iter().map(|d| d * d).sum::<f64>() / b;
    if !loss.is_finite() {
        return Err(Error::NonFinite("value loss".into()));
    }
    Ok((loss, diff * (2.0 * coef / b)))
}
