//! Kendall's tau-b with a two-sided p-value.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest sample size for which the exact permutation distribution is used
/// (ties force the normal approximation at any size).
pub const EXACT_MAX_N: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KendallTau {
    pub tau: f64,
    pub p_value: f64,
}

/// Sizes of the tie groups in `xs`.
fn tie_groups(xs: &[f64]) -> Vec<u64> {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            if run > 1 {
                groups.push(run);
            }
            run = 1;
        }
    }
    if run > 1 {
        groups.push(run);
    }
    groups
}

/// Tau-b rank correlation of `x` and `y`.
///
/// When either input is constant the coefficient is undefined; this returns
/// `tau = 0, p = 1` (no ordering evidence) instead of NaN.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<KendallTau> {
    Error::check_len("kendall inputs", x.len(), y.len())?;
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("kendall tau needs at least 2 points, got {n}")));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::NonFinite("kendall input".into()));
    }
    let (mut concordant, mut discordant) = (0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let s = (x[i] - x[j]).signum() * (y[i] - y[j]).signum();
            let tied = x[i] == x[j] || y[i] == y[j];
            if tied {
                continue;
            }
            if s > 0.0 {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as u64;
    let tx = tie_groups(x);
    let ty = tie_groups(y);
    let pairs = |g: &[u64]| g.iter().map(|t| t * (t - 1) / 2).sum::<u64>();
    let (n1, n2) = (pairs(&tx), pairs(&ty));
    if n1 == n0 || n2 == n0 {
        return Ok(KendallTau { tau: 0.0, p_value: 1.0 });
    }
    let s = concordant as f64 - discordant as f64;
    let tau = s / (((n0 - n1) as f64) * ((n0 - n2) as f64)).sqrt();

    let p_value = if tx.is_empty() && ty.is_empty() && n <= EXACT_MAX_N {
        exact_p_value(n, concordant.min(discordant))
    } else {
        normal_p_value(n, s, &tx, &ty)
    };
    Ok(KendallTau {
        tau: tau.clamp(-1.0, 1.0),
        p_value,
    })
}

/// Two-sided exact p-value `2 P(D <= d)`, where `D` is the inversion count of
/// a uniform random permutation of `n` items.
fn exact_p_value(n: usize, d: u64) -> f64 {
    let max_inv = n * (n - 1) / 2;
    // counts[k] / n! = P(D = k), built one element at a time (Mahonian numbers).
    let mut counts = vec![0.0f64; max_inv + 1];
    counts[0] = 1.0;
    let mut total = 1.0f64;
    for m in 2..=n {
        let mut next = vec![0.0f64; max_inv + 1];
        let prev_max = (m - 1) * (m - 2) / 2;
        for (k, &c) in counts.iter().enumerate().take(prev_max + 1) {
            if c == 0.0 {
                continue;
            }
            for extra in 0..m {
                next[k + extra] += c;
            }
        }
        counts = next;
        total *= m as f64;
    }
    let tail: f64 = counts[..=(d as usize)].iter().sum();
    (2.0 * tail / total).min(1.0)
}

/// Normal approximation with the tie-corrected variance of `S = Nc - Nd`.
fn normal_p_value(n: usize, s: f64, tx: &[u64], ty: &[u64]) -> f64 {
    let n = n as f64;
    let f = |g: &[u64], h: fn(f64) -> f64| g.iter().map(|&t| h(t as f64)).sum::<f64>();
    let v0 = n * (n - 1.0) * (2.0 * n + 5.0);
    let vt = f(tx, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let vu = f(ty, |t| t * (t - 1.0) * (2.0 * t + 5.0));
    let mut var = (v0 - vt - vu) / 18.0;
    if n > 2.0 {
        var += f(tx, |t| t * (t - 1.0) * (t - 2.0)) * f(ty, |t| t * (t - 1.0) * (t - 2.0))
            / (9.0 * n * (n - 1.0) * (n - 2.0));
    }
    var += f(tx, |t| t * (t - 1.0)) * f(ty, |t| t * (t - 1.0)) / (2.0 * n * (n - 1.0));
    if var <= 0.0 {
        return 1.0;
    }
    let z = s / var.sqrt();
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(kendall_tau(&x, &x).unwrap().tau, 1.0);
        let r: Vec<f64> = x.iter().rev().copied().collect();
        assert_eq!(kendall_tau(&x, &r).unwrap().tau, -1.0);
    }

    #[test]
    fn eleven_monotone_points() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v + 3.0).collect();
        let k = kendall_tau(&x, &y).unwrap();
        assert_eq!(k.tau, 1.0);
        // 2 / 11!
        assert!((k.p_value - 2.0 / 39_916_800.0).abs() < 1e-20);
        assert!((k.p_value - 5.0e-8).abs() < 0.05e-8);
    }

    #[test]
    fn small_exact_distribution() {
        // n = 3: inversion counts 0,1,1,2,2,3; P(D <= 1) = 3/6.
        assert!((exact_p_value(3, 1) - 1.0).abs() < 1e-15);
        assert!((exact_p_value(3, 0) - 2.0 / 6.0).abs() < 1e-15);
        assert!((exact_p_value(4, 0) - 2.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn tie_correction() {
        // scipy.stats.kendalltau([1,2,2,3],[1,2,3,4]) -> tau = 0.9128709291752769
        let k = kendall_tau(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((k.tau - 5.0 / 30f64.sqrt()).abs() < 1e-12);
        assert!(k.p_value > 0.0 && k.p_value < 1.0);
    }

    #[test]
    fn constant_input() {
        let k = kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((k.tau, k.p_value), (0.0, 1.0));
    }

    #[test]
    fn errors() {
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, 2.0], &[1.0]).is_err());
        assert!(kendall_tau(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }
}
