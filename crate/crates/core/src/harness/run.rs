//! Training orchestration and run-artifact persistence.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use crate::env::{EnvSpec, Fishwood, FruitTree, MultiObjectiveEnv};
use crate::error::{Error, Result};
use crate::metrics::{pareto_indices, summarize, MetricsSummary, SolutionSet};
use crate::moc::{
    evaluate_policy, linear_ppo_train, moc_train, ActionMode, PreferencePolicy, PreferenceSet,
    TrainLog,
};
use crate::par::par_map;

pub const CONFIG_FILE: &str = "config.snapshot";
pub const TRAIN_FILE: &str = "train.csv";
pub const SOLUTIONS_FILE: &str = "solutions.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const FRONT_FILE: &str = "front.csv";
pub const POLICY_FILE: &str = "policy.json";
pub const MANIFEST_FILE: &str = "run.json";

/// Offset separating evaluation randomness from training randomness.
const EVAL_SEED_OFFSET: u64 = 0x5EED_0000_0000_0001;

/// Paths and headline numbers of one finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub run_id: String,
    pub dir: PathBuf,
    pub env: String,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub reference: Vec<f64>,
    pub config_path: PathBuf,
    pub train_log_path: PathBuf,
    pub solutions_path: PathBuf,
    pub metrics_path: PathBuf,
    pub front_path: PathBuf,
    /// Preference-conditioned algorithms only.
    pub policy_path: Option<PathBuf>,
    pub metrics: MetricsSummary,
    pub wall_clock_secs: f64,
}

impl RunArtifact {
    /// Reads the manifest written into a run directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn config(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::load(&self.config_path)
    }

    pub fn solutions(&self) -> Result<SolutionSet> {
        SolutionSet::read_csv(File::open(&self.solutions_path)?)
    }

    pub fn policy(&self) -> Result<PreferencePolicy> {
        let path = self.policy_path.as_ref().ok_or_else(|| {
            Error::InvalidInput(format!("{} runs store no conditioned policy", self.algorithm))
        })?;
        PreferencePolicy::load_json(&fs::read_to_string(path)?)
    }
}

/// Everything a run produces before it is written to disk.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub logs: Vec<TrainLog>,
    /// The conditioned policy, or one unconditioned policy per weight.
    pub policies: Vec<PreferencePolicy>,
    pub solutions: SolutionSet,
    pub metrics: MetricsSummary,
}

fn train_and_evaluate<E: MultiObjectiveEnv>(env: &E, cfg: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    let eval_seed = seed ^ EVAL_SEED_OFFSET;
    let (logs, policies, solutions) = match cfg.algorithm.weight_mode() {
        Some(mode) => {
            let out = moc_train(env, &cfg.train_preferences, &cfg.ppo, mode, seed)?;
            let solutions = evaluate_policy(
                env,
                &out.policy,
                cfg.eval_preferences(),
                cfg.eval_episodes,
                cfg.eval_mode,
                eval_seed,
            )?;
            (vec![out.log], vec![out.policy], solutions)
        }
        None => {
            let runs = par_map(cfg.train_preferences.as_slice(), |w| -> Result<_> {
                let out = linear_ppo_train(env, w, &cfg.ppo, seed)?;
                let single = PreferenceSet::new(vec![w.clone()])?;
                let eval = evaluate_policy(env, &out.policy, &single, cfg.eval_episodes, cfg.eval_mode, eval_seed)?;
                Ok((out, eval.points()[0].clone()))
            });
            let mut logs = Vec::new();
            let mut policies = Vec::new();
            let mut points = Vec::new();
            for run in runs {
                let (out, point) = run?;
                logs.push(out.log);
                policies.push(out.policy);
                points.push(point);
            }
            (logs, policies, SolutionSet::new(points)?)
        }
    };
    let metrics = summarize(&solutions, &cfg.reference(), &cfg.hypervolume)?;
    Ok(RunResult {
        logs,
        policies,
        solutions,
        metrics,
    })
}

/// Trains and evaluates `cfg` for one seed without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    cfg.validate()?;
    match &cfg.env {
        EnvSpec::Fishwood(c) => train_and_evaluate(&Fishwood::new(*c)?, cfg, seed),
        EnvSpec::FruitTree(spec) => train_and_evaluate(&FruitTree::new(spec.resolve()?)?, cfg, seed),
    }
}

/// Evaluates a frozen conditioned policy on preferences it was not trained on.
pub fn eval_unseen(
    env: &EnvSpec,
    policy: &PreferencePolicy,
    prefs: &PreferenceSet,
    episodes: usize,
    mode: ActionMode,
    seed: u64,
) -> Result<SolutionSet> {
    if !policy.conditioned {
        return Err(Error::InvalidInput(
            "policy is not preference-conditioned; unseen-preference evaluation needs a moc policy".into(),
        ));
    }
    match env {
        EnvSpec::Fishwood(c) => evaluate_policy(&Fishwood::new(*c)?, policy, prefs, episodes, mode, seed),
        EnvSpec::FruitTree(spec) => {
            evaluate_policy(&FruitTree::new(spec.resolve()?)?, policy, prefs, episodes, mode, seed)
        }
    }
}

/// Runs every seed of `cfg` (in parallel when enabled), each into its own directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunArtifact>> {
    cfg.validate()?;
    par_map(&cfg.seeds, |&seed| run_seed(cfg, seed)).into_iter().collect()
}

/// Trains, evaluates and persists one seed under `cfg.out_dir/<run-id>`.
pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<RunArtifact> {
    let start = Instant::now();
    let result = execute(cfg, seed)?;
    let wall = start.elapsed().as_secs_f64();
    let (run_id, dir) = create_run_dir(&cfg.out_dir, seed)?;
    write_run(cfg, seed, &result, run_id, dir, wall)
}

fn create_run_dir(out_dir: &Path, seed: u64) -> Result<(String, PathBuf)> {
    fs::create_dir_all(out_dir)?;
    let stamp = chrono::Local::now().format("%Y%m%dT%H%M%S%.3f");
    let base = format!("{stamp}-seed{seed}");
    for attempt in 0u32.. {
        let id = if attempt == 0 {
            base.clone()
        } else {
            format!("{base}-{attempt}")
        };
        let dir = out_dir.join(&id);
        match fs::create_dir(&dir) {
            Ok(()) => return Ok((id, dir)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("run-id attempts exhausted")
}

fn write_run(
    cfg: &ExperimentConfig,
    seed: u64,
    result: &RunResult,
    run_id: String,
    dir: PathBuf,
    wall_clock_secs: f64,
) -> Result<RunArtifact> {
    let mut snapshot = cfg.clone();
    snapshot.seeds = vec![seed];
    let config_path = dir.join(CONFIG_FILE);
    fs::write(&config_path, snapshot.to_toml()?)?;

    let train_log_path = dir.join(TRAIN_FILE);
    write_train_csv(&result.logs, BufWriter::new(File::create(&train_log_path)?))?;

    let solutions_path = dir.join(SOLUTIONS_FILE);
    result
        .solutions
        .write_csv(BufWriter::new(File::create(&solutions_path)?))?;

    let metrics_path = dir.join(METRICS_FILE);
    write_metrics_csv(&result.metrics, BufWriter::new(File::create(&metrics_path)?))?;

    let front_path = dir.join(FRONT_FILE);
    write_plot_csv(&result.solutions, BufWriter::new(File::create(&front_path)?))?;

    let policy_path = match cfg.algorithm.weight_mode() {
        Some(_) => {
            let path = dir.join(POLICY_FILE);
            fs::write(&path, result.policies[0].save_json()?)?;
            Some(path)
        }
        None => {
            for (i, p) in result.policies.iter().enumerate() {
                fs::write(dir.join(format!("linear-{i}.json")), p.save_json()?)?;
            }
            None
        }
    };

    let artifact = RunArtifact {
        run_id,
        dir: dir.clone(),
        env: cfg.env.name().to_string(),
        algorithm: cfg.algorithm,
        seed,
        reference: cfg.reference(),
        config_path,
        train_log_path,
        solutions_path,
        metrics_path,
        front_path,
        policy_path,
        metrics: result.metrics.clone(),
        wall_clock_secs,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&artifact)?)?;
    Ok(artifact)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per model and iteration. Per-preference columns `p{i}_raw_{j}` and
/// `p{i}_norm_{j}` stay empty when preference `i` was not sampled; linear-PPO
/// model `m` fills only the columns of preference `m`.
pub fn write_train_csv<W: Write>(logs: &[TrainLog], writer: W) -> Result<()> {
    let first = logs
        .first()
        .ok_or_else(|| Error::InvalidInput("no training logs".into()))?;
    let n_prefs = logs.len().max(first.preferences.len());
    let n_raw = first.n_objectives;
    let n_norm = first.n_train_objectives;
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = [
        "model",
        "iteration",
        "env_steps",
        "mean_c1",
        "mean_c2",
        "violation_rate",
        "policy_loss",
        "value_loss",
        "entropy",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for i in 0..n_prefs {
        header.extend((0..n_raw).map(|j| format!("p{i}_raw_{j}")));
        header.extend((0..n_norm).map(|j| format!("p{i}_norm_{j}")));
    }
    w.write_record(&header)?;
    let single_model = logs.len() == 1;
    for (m, log) in logs.iter().enumerate() {
        for r in &log.records {
            let mut row = vec![
                m.to_string(),
                r.iteration.to_string(),
                r.env_steps.to_string(),
                r.mean_c1.to_string(),
                r.mean_c2.to_string(),
                r.violation_rate.to_string(),
                r.policy_loss.to_string(),
                r.value_loss.to_string(),
                r.entropy.to_string(),
            ];
            for i in 0..n_prefs {
                let group = if single_model {
                    r.groups.get(i).and_then(Option::as_ref)
                } else if i == m {
                    r.groups.first().and_then(Option::as_ref)
                } else {
                    None
                };
                for j in 0..n_raw {
                    row.push(fmt_opt(group.map(|g| g.raw_return[j])));
                }
                for j in 0..n_norm {
                    row.push(fmt_opt(group.map(|g| g.normalized_return[j])));
                }
            }
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Single-row summary: hypervolume, its standard error, tau, p, MPD and per-objective taus.
pub fn write_metrics_csv<W: Write>(m: &MetricsSummary, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["hypervolume", "hypervolume_std_error", "tau", "p_value", "mpd"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..m.per_objective_tau.len()).map(|j| format!("tau_objective_{j}")));
    w.write_record(&header)?;
    let mut row = vec![
        m.hypervolume.to_string(),
        m.hypervolume_std_error.to_string(),
        m.tau.to_string(),
        m.p_value.to_string(),
        fmt_opt(m.mpd),
    ];
    row.extend(m.per_objective_tau.iter().map(f64::to_string));
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}

/// Plot data: preference label, mean and std per objective, and whether the
/// point is nondominated within the set.
pub fn write_plot_csv<W: Write>(set: &SolutionSet, writer: W) -> Result<()> {
    let n = set.n_objectives();
    let front = pareto_indices(&set.means())?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["preference".to_string()];
    header.extend((0..n).map(|j| format!("mean_{j}")));
    header.extend((0..n).map(|j| format!("std_{j}")));
    header.push("nondominated".into());
    w.write_record(&header)?;
    for (i, p) in set.points().iter().enumerate() {
        let mut row = vec![p.preference.to_string()];
        row.extend(p.mean.iter().map(f64::to_string));
        row.extend(p.std.iter().map(f64::to_string));
        row.push(front.contains(&i).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Analytic fishwood front as `wood,fish` rows.
pub fn write_front_csv<W: Write>(points: &[[f64; 2]], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["wood", "fish"])?;
    for p in points {
        w.write_record([p[0].to_string(), p[1].to_string()])?;
    }
    w.flush()?;
    Ok(())
}
