use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-9;

/// Non-negative weights over objectives summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidPreference("empty vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPreference(format!(
                "entries must be finite and non-negative: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidPreference(format!(
                "entries sum to {sum}, not 1: {weights:?}"
            )));
        }
        Ok(Self(weights))
    }

    /// Two-objective preference `(w, 1 - w)`.
    pub fn pair(first: f64) -> Result<Self> {
        Self::new(vec![first, 1.0 - first])
    }

    pub fn one_hot(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidPreference(format!("index {k} >= {n}")));
        }
        let mut w = vec![0.0; n];
        w[k] = 1.0;
        Self::new(w)
    }

    /// Uniform draw from the simplex (normalized exponentials).
    pub fn sample_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPreference("zero objectives".into()));
        }
        let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = e.iter().sum();
        let mut w: Vec<f64> = e.iter().map(|v| v / total).collect();
        // Push the rounding residue into the largest entry.
        let residue = 1.0 - w.iter().sum::<f64>();
        let imax = (0..n).fold(0, |b, i| if w[i] > w[b] { i } else { b });
        w[imax] += residue;
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }
}

impl TryFrom<Vec<f64>> for PreferenceVector {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PreferenceVector> for Vec<f64> {
    fn from(p: PreferenceVector) -> Self {
        p.0
    }
}

impl fmt::Display for PreferenceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|w| format!("{w}")).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Ordered, non-empty list of preferences sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PreferenceVector>", into = "Vec<PreferenceVector>")]
pub struct PreferenceSet(Vec<PreferenceVector>);

impl PreferenceSet {
    pub fn new(prefs: Vec<PreferenceVector>) -> Result<Self> {
        let first = prefs
            .first()
            .ok_or_else(|| Error::InvalidPreference("empty preference set".into()))?;
        let n = first.len();
        if let Some(bad) = prefs.iter().find(|p| p.len() != n) {
            return Err(Error::InvalidPreference(format!(
                "mixed dimensions {n} and {}",
                bad.len()
            )));
        }
        Ok(Self(prefs))
    }

    /// `(w, 1 - w)` for each `w`.
    pub fn from_first_weights(weights: &[f64]) -> Result<Self> {
        Self::new(
            weights
                .iter()
                .map(|&w| PreferenceVector::pair(w))
                .collect::<Result<_>>()?,
        )
    }

    /// The nine two-objective preferences `0.1, 0.2, ..., 0.9`.
    pub fn tenths() -> Self {
        let w: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        Self::from_first_weights(&w).expect("valid weights")
    }

    /// `groups` sets of `size` distinct two-objective weights `k / 100`, with
    /// `k` uniform in `1..=99`, avoiding every first-weight in `exclude`.
    pub fn unseen_pair_groups<R: Rng + ?Sized>(
        groups: usize,
        size: usize,
        exclude: &PreferenceSet,
        rng: &mut R,
    ) -> Result<Vec<Self>> {
        let taken: Vec<u32> = exclude
            .iter()
            .map(|p| (p.get(0) * 100.0).round() as u32)
            .collect();
        if size + taken.len() > 99 {
            return Err(Error::InvalidInput("not enough unseen weights".into()));
        }
        (0..groups)
            .map(|_| {
                let mut ks: Vec<u32> = Vec::with_capacity(size);
                while ks.len() < size {
                    let k = rng.random_range(1..=99u32);
                    if !taken.contains(&k) && !ks.contains(&k) {
                        ks.push(k);
                    }
                }
                let w: Vec<f64> = ks.iter().map(|&k| k as f64 / 100.0).collect();
                Self::from_first_weights(&w)
            })
            .collect()
    }

    /// One-hot vertices followed by `extra` uniform simplex draws.
    pub fn vertices_and_samples<R: Rng + ?Sized>(n: usize, extra: usize, rng: &mut R) -> Result<Self> {
        let mut prefs: Vec<PreferenceVector> = (0..n)
            .map(|k| PreferenceVector::one_hot(n, k))
            .collect::<Result<_>>()?;
        for _ in 0..extra {
            prefs.push(PreferenceVector::sample_simplex(n, rng)?);
        }
        Self::new(prefs)
    }

    pub fn dim(&self) -> usize {
        self.0[0].len()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PreferenceVector> {
        self.0.iter()
    }

    pub fn get(&self, i: usize) -> &PreferenceVector {
        &self.0[i]
    }

    pub fn as_slice(&self) -> &[PreferenceVector] {
        &self.0
    }
}

impl TryFrom<Vec<PreferenceVector>> for PreferenceSet {
    type Error = Error;

    fn try_from(value: Vec<PreferenceVector>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<PreferenceSet> for Vec<PreferenceVector> {
    fn from(p: PreferenceSet) -> Self {
        p.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validation() {
        assert!(PreferenceVector::new(vec![0.3, 0.7]).is_ok());
        assert!(PreferenceVector::new(vec![0.3, 0.6]).is_err());
        assert!(PreferenceVector::new(vec![-0.1, 1.1]).is_err());
        assert!(PreferenceVector::new(vec![]).is_err());
        assert!(PreferenceSet::new(vec![]).is_err());
        let mixed = vec![
            PreferenceVector::pair(0.5).unwrap(),
            PreferenceVector::one_hot(3, 0).unwrap(),
        ];
        assert!(PreferenceSet::new(mixed).is_err());
    }

    #[test]
    fn tenths_grid() {
        let set = PreferenceSet::tenths();
        assert_eq!(set.len(), 9);
        assert!((set.get(0).get(0) - 0.1).abs() < 1e-15);
        assert!((set.get(8).get(1) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn simplex_samples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..8 {
            for _ in 0..100 {
                let p = PreferenceVector::sample_simplex(n, &mut rng).unwrap();
                assert_eq!(p.len(), n);
            }
        }
    }

    #[test]
    fn unseen_groups_avoid_training_weights() {
        let train = PreferenceSet::tenths();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let groups = PreferenceSet::unseen_pair_groups(4, 5, &train, &mut rng).unwrap();
        assert_eq!(groups.len(), 4);
        for g in &groups {
            assert_eq!(g.len(), 5);
            for p in g.iter() {
                let w = p.get(0);
                assert!((0.01..=0.99).contains(&w));
                assert!(train.iter().all(|t| (t.get(0) - w).abs() > 1e-9));
            }
        }
    }

    #[test]
    fn serde_validates() {
        let ok: PreferenceVector = serde_json::from_str("[0.25, 0.75]").unwrap();
        assert_eq!(ok.as_slice(), &[0.25, 0.75]);
        assert!(serde_json::from_str::<PreferenceVector>("[0.5, 0.6]").is_err());
    }
}
