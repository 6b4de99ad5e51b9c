//! Softmax-categorical distribution over logits.

use rand::Rng;

use crate::error::{Error, Result};

fn check_finite(logits: &[f64]) -> Result<()> {
    if logits.is_empty() {
        return Err(Error::InvalidInput("empty logits".into()));
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logits".into()));
    }
    Ok(())
}

/// `log softmax(logits)` with max subtraction.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|&l| l - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

pub fn softmax_logprob(logits: &[f64], action: usize) -> Result<f64> {
    if action >= logits.len() {
        return Err(Error::InvalidAction {
            action,
            n_actions: logits.len(),
        });
    }
    Ok(log_softmax(logits)[action])
}

/// Inverse-CDF draw; consumes exactly one uniform from `rng`.
pub fn categorical_sample<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> Result<usize> {
    check_finite(logits)?;
    let probs = softmax(logits);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding left `acc` slightly below 1: fall back to the last action with mass.
    Ok(probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1))
}

pub fn argmax(logits: &[f64]) -> Result<usize> {
    check_finite(logits)?;
    let mut best = 0;
    for (i, &l) in logits.iter().enumerate() {
        if l > logits[best] {
            best = i;
        }
    }
    Ok(best)
}

pub fn entropy(logits: &[f64]) -> f64 {
    log_softmax(logits)
        .iter()
        .map(|&lp| if lp.is_finite() { -lp.exp() * lp } else { 0.0 })
        .sum()
}
