//! Solution-set analytics: dominance, hypervolume, rank correlation and spread.

pub mod distance;
pub mod hypervolume;
pub mod kendall;
pub mod pareto;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use distance::{mean_pairwise_distance, nvd, projection_score};
pub use hypervolume::{hypervolume, hypervolume_2d, hypervolume_mc, HypervolumeEstimate, HypervolumeOptions};
pub use kendall::{kendall_tau, KendallTau};
pub use pareto::{dominates, pareto_filter, pareto_indices};

use crate::error::{Error, Result};
use crate::moc::PreferenceVector;

/// Evaluated returns for one preference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPoint {
    pub preference: PreferenceVector,
    pub mean: Vec<f64>,
    /// Population standard deviation per objective.
    pub std: Vec<f64>,
    pub episodes: usize,
}

impl SolutionPoint {
    /// Summarizes per-episode return vectors. `returns` must be non-empty.
    pub fn from_returns(preference: PreferenceVector, returns: &[Vec<f64>]) -> Self {
        let n = returns.len().max(1) as f64;
        let dim = returns.first().map_or(0, Vec::len);
        let mean: Vec<f64> = (0..dim)
            .map(|j| returns.iter().map(|r| r[j]).sum::<f64>() / n)
            .collect();
        let std = (0..dim)
            .map(|j| (returns.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        Self {
            preference,
            mean,
            std,
            episodes: returns.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    points: Vec<SolutionPoint>,
}

impl SolutionSet {
    pub fn new(points: Vec<SolutionPoint>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidInput("empty solution set".into()))?;
        let n = first.mean.len();
        if n == 0 {
            return Err(Error::InvalidInput("solution with no objectives".into()));
        }
        for p in &points {
            Error::check_len("solution mean", n, p.mean.len())?;
            Error::check_len("solution std", n, p.std.len())?;
            Error::check_len("solution preference", n, p.preference.len())?;
            if p.episodes == 0 {
                return Err(Error::InvalidInput("solution with zero episodes".into()));
            }
            if p.mean.iter().chain(&p.std).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("solution returns".into()));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[SolutionPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn n_objectives(&self) -> usize {
        self.points[0].mean.len()
    }

    pub fn means(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.mean.clone()).collect()
    }

    /// CSV with columns `pref_j`, `mean_j`, `std_j` per objective, then `episodes`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let n = self.n_objectives();
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = Vec::with_capacity(3 * n + 1);
        for prefix in ["pref", "mean", "std"] {
            header.extend((0..n).map(|j| format!("{prefix}_{j}")));
        }
        header.push("episodes".into());
        w.write_record(&header)?;
        for p in &self.points {
            let mut row: Vec<String> = p.preference.as_slice().iter().map(f64::to_string).collect();
            row.extend(p.mean.iter().map(f64::to_string));
            row.extend(p.std.iter().map(f64::to_string));
            row.push(p.episodes.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let width = r.headers()?.len();
        if width < 4 || (width - 1) % 3 != 0 {
            return Err(Error::Parse {
                line: 1,
                reason: format!("unexpected solution header width {width}"),
            });
        }
        let n = (width - 1) / 3;
        let mut points = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let num = |k: usize| -> Result<f64> {
                rec[k].trim().parse().map_err(|e| Error::Parse {
                    line,
                    reason: format!("column {k}: {e}"),
                })
            };
            let pref = (0..n).map(num).collect::<Result<Vec<_>>>()?;
            let mean = (n..2 * n).map(num).collect::<Result<Vec<_>>>()?;
            let std = (2 * n..3 * n).map(num).collect::<Result<Vec<_>>>()?;
            let episodes = rec[3 * n].trim().parse().map_err(|e| Error::Parse {
                line,
                reason: format!("episodes: {e}"),
            })?;
            points.push(SolutionPoint {
                preference: PreferenceVector::new(pref)?,
                mean,
                std,
                episodes,
            });
        }
        Self::new(points)
    }
}

/// Headline metrics of one solution set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub hypervolume: f64,
    pub hypervolume_std_error: f64,
    /// Two objectives: tau between the first preference weight and the
    /// projection score. More objectives: mean of the per-objective taus.
    pub tau: f64,
    /// Two objectives: the tau p-value. More: the largest per-objective p-value.
    pub p_value: f64,
    /// Tau between `p_j` and mean return `j`, per objective.
    pub per_objective_tau: Vec<f64>,
    /// `None` for a single point.
    pub mpd: Option<f64>,
}

/// Computes all headline metrics of `set` against `reference`.
pub fn summarize(set: &SolutionSet, reference: &[f64], opts: &HypervolumeOptions) -> Result<MetricsSummary> {
    let n = set.n_objectives();
    Error::check_len("metrics reference", n, reference.len())?;
    let means = set.means();
    let hv = hypervolume(&means, reference, opts)?;
    let mpd = if set.len() >= 2 {
        Some(mean_pairwise_distance(&means)?)
    } else {
        None
    };
    let per_objective: Vec<KendallTau> = if set.len() >= 2 {
        (0..n)
            .map(|j| {
                let w: Vec<f64> = set.points.iter().map(|p| p.preference.get(j)).collect();
                let r: Vec<f64> = set.points.iter().map(|p| p.mean[j]).collect();
                kendall_tau(&w, &r)
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let (tau, p_value) = if set.len() < 2 {
        (0.0, 1.0)
    } else if n == 2 {
        let w: Vec<f64> = set.points.iter().map(|p| p.preference.get(0)).collect();
        let s = means
            .iter()
            .map(|m| projection_score(m, reference))
            .collect::<Result<Vec<_>>>()?;
        let k = kendall_tau(&w, &s)?;
        (k.tau, k.p_value)
    } else {
        let mean_tau = per_objective.iter().map(|k| k.tau).sum::<f64>() / n as f64;
        let max_p = per_objective.iter().map(|k| k.p_value).fold(0.0, f64::max);
        (mean_tau, max_p)
    };
    Ok(MetricsSummary {
        hypervolume: hv.value,
        hypervolume_std_error: hv.std_error,
        tau,
        p_value,
        per_objective_tau: per_objective.iter().map(|k| k.tau).collect(),
        mpd,
    })
}
