//! `moc`: train, evaluate and compare controllable multi-objective policies.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use moc_core::env::{fishwood_pareto_front, EnvSpec, FishwoodConfig, SimRng};
use moc_core::harness::run::{write_front_csv, write_plot_csv};
use moc_core::harness::{compare_runs, eval_unseen, run_experiment, Algorithm, ExperimentConfig, RunArtifact};
use moc_core::metrics::summarize;
use moc_core::moc::{ActionMode, PreferencePolicy, PreferenceSet};
use rand::SeedableRng;

#[derive(Debug, Parser)]
#[command(name = "moc", version, about = "Controllable multi-objective PPO experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train and evaluate one experiment config.
    Train(TrainArgs),
    /// Evaluate a trained conditioned policy on unseen preferences.
    EvalUnseen(EvalUnseenArgs),
    /// Tabulate metrics of finished runs side by side.
    Compare(CompareArgs),
    /// Write the analytic fishwood Pareto front.
    ParetoFront(ParetoFrontArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    config: PathBuf,
    /// Run only this seed instead of the config's list.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's algorithm.
    #[arg(long)]
    algo: Option<String>,
    /// Evaluate with the most likely action instead of sampling.
    #[arg(long)]
    greedy: bool,
}

#[derive(Debug, Args)]
struct EvalUnseenArgs {
    /// Experiment config naming the environment (and default episode count).
    #[arg(long)]
    config: PathBuf,
    /// Policy file written by `train` (policy.json).
    #[arg(long)]
    policy: PathBuf,
    /// Comma-separated first-objective weights, e.g. `0.15,0.42,0.77`
    /// (two-objective environments). Overrides the random groups.
    #[arg(long, value_delimiter = ',')]
    prefs: Option<Vec<f64>>,
    /// Number of random groups of unseen weights.
    #[arg(long, default_value_t = 4)]
    groups: usize,
    #[arg(long, default_value_t = 5)]
    group_size: usize,
    /// Evaluation episodes per preference; defaults to the config's value.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    greedy: bool,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Run directories produced by `train`.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ParetoFrontArgs {
    /// Fishwood experiment config; defaults to the standard environment.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn train(args: TrainArgs) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading config {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if let Some(name) = args.algo {
        cfg.algorithm = name.parse::<Algorithm>()?;
    }
    if args.greedy {
        cfg.eval_mode = ActionMode::Greedy;
    }
    cfg.validate()?;
    for a in run_experiment(&cfg)? {
        let m = &a.metrics;
        println!(
            "run={} algorithm={} seed={} hypervolume={} tau={} p_value={} mpd={} dir={}",
            a.run_id,
            a.algorithm,
            a.seed,
            m.hypervolume,
            m.tau,
            m.p_value,
            m.mpd.map(|v| v.to_string()).unwrap_or_default(),
            a.dir.display()
        );
    }
    Ok(())
}

fn eval_unseen_cmd(args: EvalUnseenArgs) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(&args.config)
        .with_context(|| format!("loading config {}", args.config.display()))?;
    let text = fs::read_to_string(&args.policy)
        .with_context(|| format!("reading policy {}", args.policy.display()))?;
    let policy = PreferencePolicy::load_json(&text)?;
    let episodes = args.episodes.unwrap_or(cfg.eval_episodes);
    let mode = if args.greedy { ActionMode::Greedy } else { cfg.eval_mode };

    let groups: Vec<PreferenceSet> = match &args.prefs {
        Some(w) if w.is_empty() => bail!("--prefs lists no weights"),
        Some(w) => vec![PreferenceSet::from_first_weights(w)?],
        None => {
            if cfg.env.n_objectives() != 2 {
                bail!("random unseen groups are defined for two objectives; pass --prefs");
            }
            let mut rng = SimRng::seed_from_u64(args.seed);
            PreferenceSet::unseen_pair_groups(args.groups, args.group_size, &cfg.train_preferences, &mut rng)?
        }
    };

    fs::create_dir_all(&args.out)?;
    let reference = cfg.reference();
    let mut summary = csv::Writer::from_path(args.out.join("unseen-metrics.csv"))?;
    summary.write_record(["group", "preferences", "hypervolume", "tau", "p_value", "mpd"])?;
    for (g, prefs) in groups.iter().enumerate() {
        let set = eval_unseen(&cfg.env, &policy, prefs, episodes, mode, args.seed.wrapping_add(g as u64))?;
        set.write_csv(BufWriter::new(File::create(args.out.join(format!("unseen-solutions-g{g}.csv")))?))?;
        write_plot_csv(&set, BufWriter::new(File::create(args.out.join(format!("unseen-plot-g{g}.csv")))?))?;
        let m = summarize(&set, &reference, &cfg.hypervolume)?;
        let labels: Vec<String> = prefs.iter().map(ToString::to_string).collect();
        let mpd = m.mpd.map(|v| v.to_string()).unwrap_or_default();
        summary.write_record([
            g.to_string(),
            labels.join(" "),
            m.hypervolume.to_string(),
            m.tau.to_string(),
            m.p_value.to_string(),
            mpd.clone(),
        ])?;
        println!("group={g} tau={} p_value={} hypervolume={} mpd={mpd}", m.tau, m.p_value, m.hypervolume);
    }
    summary.flush()?;
    Ok(())
}

fn compare_cmd(args: CompareArgs) -> anyhow::Result<()> {
    let artifacts = args
        .runs
        .iter()
        .map(|d| RunArtifact::load(d).with_context(|| format!("loading run {}", d.display())))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let out = compare_runs(&artifacts, &args.out)?;
    println!("table={}", out.table.display());
    println!("points={}", out.points.display());
    Ok(())
}

fn pareto_front_cmd(args: ParetoFrontArgs) -> anyhow::Result<()> {
    let fish = match &args.config {
        None => FishwoodConfig::default(),
        Some(path) => match ExperimentConfig::load(path)?.env {
            EnvSpec::Fishwood(c) => c,
            other => bail!("no analytic front for environment `{}`", other.name()),
        },
    };
    fs::create_dir_all(&args.out)?;
    let path = args.out.join("pareto-front.csv");
    write_front_csv(&fishwood_pareto_front(&fish), BufWriter::new(File::create(&path)?))?;
    println!("front={}", path.display());
    Ok(())
}

/// Stable identifier of an error's category for the machine-readable line.
fn error_kind(err: &anyhow::Error) -> &'static str {
    use moc_core::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidConfig { .. } | E::TomlDe(_) | E::InvalidPreference(_) => "invalid_config",
                E::Divergence { .. } | E::NonFinite(_) => "divergence",
                E::Io(_) => "io",
                E::Parse { .. } | E::Csv(_) | E::Json(_) | E::TomlSer(_) => "parse",
                _ => "invalid_input",
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return "io";
        }
    }
    "invalid_input"
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(a) => train(a),
        Command::EvalUnseen(a) => eval_unseen_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::ParetoFront(a) => pareto_front_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let body = text.split("\n\nUsage:").next().unwrap_or_default();
            let message = body.trim_start_matches("error: ").split_whitespace().collect::<Vec<_>>().join(" ");
            eprintln!("{}", error_line("usage", &message));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_line(error_kind(&err), &format!("{err:#}")));
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_line_is_json() {
        let line = error_line("io", "no \"file\"\nhere");
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "io");
        assert_eq!(v["message"], "no \"file\"\nhere");
        assert!(!line.contains('\n'));
    }

    #[test]
    fn kinds_follow_the_cause_chain() {
        let e = anyhow::Error::new(moc_core::Error::Divergence {
            iteration: 3,
            reason: "nan".into(),
        })
        .context("training");
        assert_eq!(error_kind(&e), "divergence");
        let e = anyhow::anyhow!("plain");
        assert_eq!(error_kind(&e), "invalid_input");
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
