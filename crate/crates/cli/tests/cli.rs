use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
algorithm = "moc"
train_preferences = [[0.2, 0.8], [0.5, 0.5], [0.8, 0.2]]
eval_episodes = 4

[env]
name = "fishwood"
horizon = 40

[ppo]
hidden_layers = 1
hidden_width = 16
total_steps = 1600
"#;

fn moc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moc")).args(args).output().unwrap()
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    fs::write(&path, TINY).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout_value(out: &Output, key: &str) -> String {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

fn assert_error_line(out: &Output, kind: &str) {
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr.clone()).unwrap();
    let line = stderr.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["error"], kind, "{line}");
    assert!(v["message"].as_str().is_some_and(|m| !m.is_empty()));
}

#[test]
fn train_then_eval_unseen_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let runs = dir.path().join("runs");
    let runs_s = runs.to_str().unwrap();

    let out = moc(&["train", "--config", &cfg, "--seed", "3", "--out", runs_s]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let moc_dir = stdout_value(&out, "dir");
    for f in ["solutions.csv", "metrics.csv", "train.csv", "policy.json", "run.json", "config.snapshot", "front.csv"] {
        assert!(Path::new(&moc_dir).join(f).exists(), "missing {f}");
    }
    let header = fs::read_to_string(Path::new(&moc_dir).join("solutions.csv")).unwrap();
    assert!(header.starts_with("pref_0,pref_1,mean_0,mean_1,std_0,std_1,episodes"));

    let out = moc(&["train", "--config", &cfg, "--seed", "3", "--out", runs_s, "--algo", "linear-ppo", "--greedy"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_value(&out, "algorithm"), "linear-ppo");
    let lin_dir = stdout_value(&out, "dir");

    let unseen = dir.path().join("unseen");
    let policy = Path::new(&moc_dir).join("policy.json");
    let out = moc(&[
        "eval-unseen",
        "--config",
        &cfg,
        "--policy",
        policy.to_str().unwrap(),
        "--groups",
        "2",
        "--group-size",
        "3",
        "--episodes",
        "2",
        "--out",
        unseen.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(unseen.join("unseen-metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);
    assert!(unseen.join("unseen-solutions-g1.csv").exists());

    let cmp = dir.path().join("cmp");
    let out = moc(&["compare", &moc_dir, &lin_dir, "--out", cmp.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(cmp.join("comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(table.contains(",linear-ppo,"));
}

#[test]
fn pareto_front_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = moc(&["pareto-front", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("pareto-front.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("wood,fish"));
    assert_eq!(lines.next(), Some("0,100"));
    assert_eq!(lines.count(), 200);
}

#[test]
fn failures_emit_one_json_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.toml");
    assert_error_line(&moc(&["train", "--config", missing.to_str().unwrap()]), "io");

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, TINY.replace("eval_episodes = 4", "eval_episodes = 0")).unwrap();
    assert_error_line(&moc(&["train", "--config", bad.to_str().unwrap()]), "invalid_config");

    let cfg = write_config(dir.path());
    let out = moc(&["train", "--config", &cfg, "--algo", "nonsense"]);
    assert_error_line(&out, "invalid_config");

    let out = moc(&["compare"]);
    assert_eq!(out.status.code(), Some(2));
    assert_error_line(&out, "usage");
}
