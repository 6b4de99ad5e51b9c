//! Dominated hypervolume: exact sweep in two dimensions, Monte-Carlo above.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::env::SimRng;
use crate::error::{Error, Result};
use crate::par::par_map_range;

/// Samples per independently seeded Monte-Carlo chunk.
const MC_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypervolumeOptions {
    /// Monte-Carlo sample count (used when the dimension exceeds 2).
    pub samples: usize,
    pub seed: u64,
}

impl Default for HypervolumeOptions {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypervolumeEstimate {
    pub value: f64,
    /// Zero for exact computations.
    pub std_error: f64,
    /// Zero for exact computations.
    pub samples: usize,
}

/// Points strictly better than `reference` in every coordinate; the others
/// enclose no volume.
fn contributing(points: &[Vec<f64>], reference: &[f64]) -> Result<Vec<Vec<f64>>> {
    for p in points {
        Error::check_len("hypervolume point", reference.len(), p.len())?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hypervolume point".into()));
        }
    }
    Ok(points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(x, r)| x > r))
        .cloned()
        .collect())
}

/// Exact area dominated by `points` and bounded below by `reference`.
pub fn hypervolume_2d(points: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    Error::check_len("hypervolume reference", 2, reference.len())?;
    let mut pts = contributing(points, reference)?;
    pts.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));
    let mut area = 0.0;
    let mut y_top = reference[1];
    for p in &pts {
        if p[1] > y_top {
            area += (p[0] - reference[0]) * (p[1] - y_top);
            y_top = p[1];
        }
    }
    Ok(area)
}

/// Monte-Carlo estimate over the box `[reference, componentwise max]`.
///
/// Sampling is split into fixed-size chunks, chunk `k` drawing from stream `k`
/// of `opts.seed`, so the estimate is identical with or without threads.
pub fn hypervolume_mc(
    points: &[Vec<f64>],
    reference: &[f64],
    opts: &HypervolumeOptions,
) -> Result<HypervolumeEstimate> {
    if reference.is_empty() {
        return Err(Error::InvalidInput("empty hypervolume reference".into()));
    }
    if opts.samples == 0 {
        return Err(Error::config("hypervolume.samples", "must be at least 1"));
    }
    let pts = contributing(points, reference)?;
    if pts.is_empty() {
        return Ok(HypervolumeEstimate {
            value: 0.0,
            std_error: 0.0,
            samples: opts.samples,
        });
    }
    let dim = reference.len();
    let upper: Vec<f64> = (0..dim)
        .map(|j| pts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let box_volume: f64 = upper.iter().zip(reference).map(|(u, r)| u - r).product();

    let chunks = opts.samples.div_ceil(MC_CHUNK);
    let hits: u64 = par_map_range(chunks, |k| {
        let n = MC_CHUNK.min(opts.samples - k * MC_CHUNK);
        let mut rng = SimRng::seed_from_u64(opts.seed);
        rng.set_stream(k as u64);
        let mut x = vec![0.0; dim];
        let mut hits = 0u64;
        for _ in 0..n {
            for j in 0..dim {
                x[j] = reference[j] + rng.random::<f64>() * (upper[j] - reference[j]);
            }
            if pts.iter().any(|p| p.iter().zip(&x).all(|(pj, xj)| xj <= pj)) {
                hits += 1;
            }
        }
        hits
    })
    .into_iter()
    .sum();

    let n = opts.samples as f64;
    let frac = hits as f64 / n;
    Ok(HypervolumeEstimate {
        value: box_volume * frac,
        std_error: box_volume * (frac * (1.0 - frac) / n).sqrt(),
        samples: opts.samples,
    })
}

/// Exact for one or two objectives, Monte-Carlo otherwise.
pub fn hypervolume(
    points: &[Vec<f64>],
    reference: &[f64],
    opts: &HypervolumeOptions,
) -> Result<HypervolumeEstimate> {
    let exact = |value| HypervolumeEstimate {
        value,
        std_error: 0.0,
        samples: 0,
    };
    match reference.len() {
        0 => Err(Error::InvalidInput("empty hypervolume reference".into())),
        1 => {
            let best = contributing(points, reference)?
                .iter()
                .map(|p| p[0] - reference[0])
                .fold(0.0, f64::max);
            Ok(exact(best))
        }
        2 => Ok(exact(hypervolume_2d(points, reference)?)),
        _ => hypervolume_mc(points, reference, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_box() {
        assert_eq!(hypervolume_2d(&[vec![2.0, 3.0]], &[0.0, 0.0]).unwrap(), 6.0);
    }

    #[test]
    fn overlapping_boxes() {
        let pts = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert_eq!(hypervolume_2d(&pts, &[0.0, 0.0]).unwrap(), 3.0);
    }

    #[test]
    fn non_dominating_points_excluded() {
        let pts = vec![vec![2.0, 3.0], vec![-1.0, 10.0], vec![5.0, 0.0]];
        assert_eq!(hypervolume_2d(&pts, &[0.0, 0.0]).unwrap(), 6.0);
        assert_eq!(hypervolume_2d(&[], &[0.0, 0.0]).unwrap(), 0.0);
        assert!(hypervolume_2d(&[vec![1.0, 1.0, 1.0]], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn mc_unit_cube_corner() {
        let pts = vec![vec![1.0, 1.0, 1.0], vec![2.0, 0.5, 0.5]];
        // Union: 1 + (2 - 1) * 0.5 * 0.5.
        let est = hypervolume_mc(&pts, &[0.0; 3], &HypervolumeOptions::default()).unwrap();
        assert!((est.value - 1.25).abs() < 4.0 * est.std_error);
        assert!(est.std_error > 0.0 && est.std_error < 0.01);
    }

    #[test]
    fn mc_deterministic_for_seed() {
        let pts = vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]];
        let opts = HypervolumeOptions {
            samples: 100_000,
            seed: 9,
        };
        let a = hypervolume_mc(&pts, &[0.0; 3], &opts).unwrap();
        let b = hypervolume_mc(&pts, &[0.0; 3], &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dispatch() {
        let opts = HypervolumeOptions::default();
        assert_eq!(hypervolume(&[vec![3.0], vec![1.0]], &[0.5], &opts).unwrap().value, 2.5);
        let e = hypervolume(&[vec![1.0, 2.0], vec![2.0, 1.0]], &[0.0, 0.0], &opts).unwrap();
        assert_eq!((e.value, e.std_error), (3.0, 0.0));
    }
}
