//! Running reward statistics and the preference-scale normalizer
//! `(r - mean) / (2 std) + 1`, which puts the running mean at 1.

use serde::{Deserialize, Serialize};

use super::preference::PreferenceVector;
use crate::error::{Error, Result};

pub const STD_FLOOR: f64 = 1e-6;

/// Per-objective Welford accumulator (population variance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    mean: Vec<f64>,
    m2: Vec<f64>,
    count: u64,
}

impl RunningNorm {
    pub fn new(n_objectives: usize) -> Self {
        Self {
            mean: vec![0.0; n_objectives],
            m2: vec![0.0; n_objectives],
            count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> Vec<f64> {
        (0..self.dim()).map(|j| self.std_at(j)).collect()
    }

    fn std_at(&self, j: usize) -> f64 {
        if self.count == 0 {
            return STD_FLOOR;
        }
        (self.m2[j] / self.count as f64).sqrt().max(STD_FLOOR)
    }

    pub fn update(&mut self, r: &[f64]) -> Result<()> {
        Error::check_len("running norm sample", self.dim(), r.len())?;
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reward".into()));
        }
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(r) {
            let delta = x - *m;
            *m += delta / n;
            *s += delta * (x - *m);
        }
        Ok(())
    }

    /// Applies the normalizer without touching the statistics.
    pub fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("running norm sample", self.dim(), r.len())?;
        Ok(r.iter()
            .enumerate()
            .map(|(j, &x)| (x - self.mean[j]) / (2.0 * self.std_at(j)) + 1.0)
            .collect())
    }
}

/// Folds `r` into `stats`, then normalizes it.
pub fn normalize_reward(stats: &mut RunningNorm, r: &[f64]) -> Result<Vec<f64>> {
    stats.update(r)?;
    stats.apply(r)
}

/// Mean squared difference between a normalized reward and a preference.
pub fn amvs(r_norm: &[f64], p: &PreferenceVector) -> Result<f64> {
    mse(r_norm, p.as_slice())
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    Error::check_len("mse operands", a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::InvalidInput("mse of empty vectors".into()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64)
}

/// `max(mse - phi, 0)`.
pub fn hinge_violation(mse: f64, phi: f64) -> f64 {
    (mse - phi).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats_with(samples: &[[f64; 2]]) -> RunningNorm {
        let mut s = RunningNorm::new(2);
        for r in samples {
            s.update(r).unwrap();
        }
        s
    }

    #[test]
    fn value_at_mean_maps_to_one() {
        let s = stats_with(&[[1.0, 10.0], [3.0, 30.0]]);
        let out = s.apply(s.mean()).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn two_std_above_mean_maps_to_two() {
        let s = stats_with(&[[1.0, -4.0], [3.0, 4.0], [8.0, 0.5]]);
        let std = s.std();
        let r: Vec<f64> = (0..2).map(|j| s.mean()[j] + 2.0 * std[j]).collect();
        let out = s.apply(&r).unwrap();
        assert!(out.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn stream_one_to_five() {
        let mut s = RunningNorm::new(1);
        for x in 1..=4 {
            s.update(&[x as f64]).unwrap();
        }
        let out = normalize_reward(&mut s, &[5.0]).unwrap();
        // mean 3, population variance (4+1+0+1+4)/5 = 2.
        let expected = (5.0 - 3.0) / (2.0 * 2.0f64.sqrt()) + 1.0;
        assert!((out[0] - expected).abs() < 1e-12);
        assert_eq!(s.count(), 5);
    }

    #[test]
    fn std_floor_applies() {
        let s = stats_with(&[[2.0, 2.0]]);
        assert_eq!(s.std(), vec![STD_FLOOR, STD_FLOOR]);
        assert_eq!(s.apply(&[2.0, 2.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn amvs_cases() {
        let p = PreferenceVector::pair(0.3).unwrap();
        assert_eq!(amvs(&[0.3, 0.7], &p).unwrap(), 0.0);
        let q = PreferenceVector::new(vec![0.0, 1.0]).unwrap();
        assert!((amvs(&[1.0, 0.0], &q).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(mse(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), mse(&[0.0, 1.0], &[1.0, 0.0]).unwrap());
        assert!(amvs(&[1.0], &q).is_err());
    }

    #[test]
    fn hinge_cases() {
        assert_eq!(hinge_violation(0.05, 0.1), 0.0);
        assert!((hinge_violation(0.3, 0.1) - 0.2).abs() < 1e-15);
        assert_eq!(hinge_violation(0.1, 0.1), 0.0);
    }
}
