//! Side-by-side comparison of finished runs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::run::{write_plot_csv, RunArtifact};
use crate::error::{Error, Result};
use crate::metrics::SolutionSet;

pub const COMPARISON_FILE: &str = "comparison.csv";
pub const POINTS_FILE: &str = "points.csv";

/// Files written by [`compare_runs`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonOutput {
    pub table: PathBuf,
    pub points: PathBuf,
    pub plots: Vec<PathBuf>,
}

/// Checks that the runs are comparable and loads their solution sets.
fn load_comparable(artifacts: &[RunArtifact]) -> Result<Vec<SolutionSet>> {
    let first = artifacts
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to compare".into()))?;
    let env = first.config()?.env;
    for a in &artifacts[1..] {
        if a.config()?.env != env {
            return Err(Error::InvalidInput(format!(
                "run {} uses a different environment than run {}",
                a.run_id, first.run_id
            )));
        }
        if a.reference != first.reference {
            return Err(Error::InvalidInput(format!(
                "run {} uses a different reference point than run {}",
                a.run_id, first.run_id
            )));
        }
    }
    artifacts.iter().map(RunArtifact::solutions).collect()
}

/// One row per run: hypervolume, tau with p-value, MPD.
pub fn write_comparison_csv<W: Write>(artifacts: &[RunArtifact], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "run_id",
        "algorithm",
        "seed",
        "env",
        "hypervolume",
        "hypervolume_std_error",
        "tau",
        "p_value",
        "mpd",
    ])?;
    for a in artifacts {
        let m = &a.metrics;
        w.write_record([
            a.run_id.clone(),
            a.algorithm.to_string(),
            a.seed.to_string(),
            a.env.clone(),
            m.hypervolume.to_string(),
            m.hypervolume_std_error.to_string(),
            m.tau.to_string(),
            m.p_value.to_string(),
            m.mpd.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format per-preference return vectors of every run.
pub fn write_points_csv<W: Write>(artifacts: &[RunArtifact], sets: &[SolutionSet], writer: W) -> Result<()> {
    let n = sets.first().map_or(0, SolutionSet::n_objectives);
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["run_id", "algorithm", "seed", "preference"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..n).map(|j| format!("mean_{j}")));
    header.extend((0..n).map(|j| format!("std_{j}")));
    w.write_record(&header)?;
    for (a, set) in artifacts.iter().zip(sets) {
        for p in set.points() {
            let mut row = vec![
                a.run_id.clone(),
                a.algorithm.to_string(),
                a.seed.to_string(),
                p.preference.to_string(),
            ];
            row.extend(p.mean.iter().map(f64::to_string));
            row.extend(p.std.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the comparison table, the long-format point table and one plot-data
/// file per run into `out_dir`.
pub fn compare_runs(artifacts: &[RunArtifact], out_dir: &Path) -> Result<ComparisonOutput> {
    let sets = load_comparable(artifacts)?;
    fs::create_dir_all(out_dir)?;
    let table = out_dir.join(COMPARISON_FILE);
    write_comparison_csv(artifacts, BufWriter::new(File::create(&table)?))?;
    let points = out_dir.join(POINTS_FILE);
    write_points_csv(artifacts, &sets, BufWriter::new(File::create(&points)?))?;
    let mut plots = Vec::with_capacity(artifacts.len());
    for (a, set) in artifacts.iter().zip(&sets) {
        let path = out_dir.join(format!("plot-{}-{}.csv", a.algorithm, a.run_id));
        write_plot_csv(set, BufWriter::new(File::create(&path)?))?;
        plots.push(path);
    }
    Ok(ComparisonOutput { table, points, plots })
}
