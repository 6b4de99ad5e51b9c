use crate::error::{Error, Result};

/// Generalized advantage estimates for one objective of one episode.
///
/// `values[t]` is `V(s_t)`; `bootstrap` stands in for `V(s_T)` after the last
/// step (zero for a terminated episode).
pub fn gae_advantages(
    rewards: &[f64],
    values: &[f64],
    bootstrap: f64,
    gamma: f64,
    lam: f64,
) -> Result<Vec<f64>> {
    Error::check_len("gae values", rewards.len(), values.len())?;
    let mut adv = vec![0.0; rewards.len()];
    let mut next_value = bootstrap;
    let mut running = 0.0;
    for t in (0..rewards.len()).rev() {
        let delta = rewards[t] + gamma * next_value - values[t];
        running = delta + gamma * lam * running;
        adv[t] = running;
        next_value = values[t];
    }
    Ok(adv)
}

/// Advantages plus value estimates: the regression target for the critic.
pub fn lambda_returns(advantages: &[f64], values: &[f64]) -> Vec<f64> {
    advantages.iter().zip(values).map(|(a, v)| a + v).collect()
}

/// Shifts and scales `xs` to zero mean and unit (population) std in place.
/// A constant input is only centered.
pub fn standardize(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let scale = if std > 1e-8 { 1.0 / std } else { 1.0 };
    xs.iter_mut().for_each(|x| *x = (*x - mean) * scale);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_zero_is_td_error() {
        let r = [1.0, 0.5, -2.0];
        let v = [0.3, -0.1, 0.7];
        let a = gae_advantages(&r, &v, 0.4, 0.9, 0.0).unwrap();
        let td = [
            1.0 + 0.9 * -0.1 - 0.3,
            0.5 + 0.9 * 0.7 - -0.1,
            -2.0 + 0.9 * 0.4 - 0.7,
        ];
        for (x, y) in a.iter().zip(td) {
            assert_eq!(*x, y);
        }
    }

    #[test]
    fn monte_carlo_limit_is_reward_to_go() {
        let r = [1.0, 2.0, 3.0, 4.0];
        let a = gae_advantages(&r, &[0.0; 4], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(a, vec![10.0, 9.0, 7.0, 4.0]);
    }

    #[test]
    fn length_mismatch() {
        assert!(gae_advantages(&[1.0, 2.0], &[0.0], 0.0, 0.99, 0.95).is_err());
    }

    #[test]
    fn standardize_moments() {
        let mut xs = vec![1.0, 2.0, 3.0, 10.0];
        standardize(&mut xs);
        let mean: f64 = xs.iter().sum::<f64>() / 4.0;
        let var: f64 = xs.iter().map(|x| x * x).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        let mut flat = vec![3.0; 5];
        standardize(&mut flat);
        assert!(flat.iter().all(|&x| x == 0.0));
    }
}
