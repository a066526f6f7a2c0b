use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scopal(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scopal"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

fn only_run(root: &Path, prefix: &str) -> PathBuf {
    let mut runs: Vec<PathBuf> = fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(prefix))
        .collect();
    assert_eq!(runs.len(), 1, "{runs:?}");
    runs.pop().unwrap()
}

const SMALL_TTT: &str = "games = [\"tictactoe\"]\nepisodes = 60\neval_episodes = 10\neval_opponents = [\"random\"]\n";

#[test]
fn pipeline_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TTT);
    let out = dir.path().join("runs");
    let o = scopal(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "pipeline"], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = only_run(&out, "pipeline-");
    for f in ["manifest.json", "config.toml", "traj.jsonl", "labeled.jsonl", "policy.ckpt", "metrics.csv", "tournament.csv"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "pipeline");
    assert_eq!(manifest["seed"], 0);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["artifacts"]["traj.jsonl"].is_string());
    assert_eq!(fs::read_to_string(run.join("traj.jsonl")).unwrap().lines().count(), 60);
}

#[test]
fn existing_runs_are_never_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TTT);
    let out = dir.path().join("runs");
    let args = ["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "evaluate"];
    assert!(scopal(&args, &[]).status.success());
    let run = only_run(&out, "evaluate-");
    let before = fs::read(run.join("tournament.csv")).unwrap();
    let again = scopal(&args, &[]);
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("already exists"));
    assert_eq!(fs::read(run.join("tournament.csv")).unwrap(), before);
    // a different seed is a different run
    let seeded = ["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9", "evaluate"];
    assert!(scopal(&seeded, &[]).status.success());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = scopal(&["frobnicate"], &[]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));
    assert_eq!(scopal(&[], &[]).status.code(), Some(2));

    let bad = write_config(dir.path(), "epsiodes = 10\n");
    assert_eq!(scopal(&["--config", bad.to_str().unwrap(), "evaluate"], &[]).status.code(), Some(2));
    let bad_agent = write_config(dir.path(), "opponent = \"gpt-4\"\n");
    assert_eq!(scopal(&["--config", bad_agent.to_str().unwrap(), "interact"], &[]).status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    assert_eq!(scopal(&["--config", missing.to_str().unwrap(), "interact"], &[]).status.code(), Some(2));

    let cfg = write_config(dir.path(), SMALL_TTT);
    let out = dir.path().join("runs");
    let no_input = scopal(
        &["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "estimate", "--trajectories", "/nonexistent/traj.jsonl"],
        &[],
    );
    assert_eq!(no_input.status.code(), Some(1));
    let regret_on_c4 = write_config(dir.path(), "games = [\"connect_four\"]\n");
    assert_eq!(
        scopal(&["--config", regret_on_c4.to_str().unwrap(), "--out", out.to_str().unwrap(), "regret"], &[]).status.code(),
        Some(2)
    );
}

#[test]
fn environment_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TTT);
    let out = dir.path().join("env-runs");
    let o = scopal(
        &["interact"],
        &[("SCOPAL_CONFIG", cfg.to_str().unwrap()), ("SCOPAL_OUT", out.to_str().unwrap()), ("SCOPAL_SEED", "5"), ("SCOPAL_JOBS", "1")],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = only_run(&out, "interact-");
    let manifest = fs::read_to_string(run.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 5"));
}

#[test]
fn staged_subcommands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TTT);
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("runs");
    let out = out.to_str().unwrap();
    assert!(scopal(&["--config", cfg, "--out", out, "interact"], &[]).status.success());
    let traj = only_run(Path::new(out), "interact-").join("traj.jsonl");
    assert!(scopal(&["--config", cfg, "--out", out, "estimate", "--trajectories", traj.to_str().unwrap()], &[]).status.success());
    let labeled = only_run(Path::new(out), "estimate-").join("labeled.jsonl");
    let o = scopal(&["--config", cfg, "--out", out, "train", "--labeled", labeled.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ckpt = only_run(Path::new(out), "train-").join("policy.ckpt");
    let o = scopal(&["--config", cfg, "--out", out, "evaluate", "--policy", ckpt.to_str().unwrap()], &[]);
    assert!(o.status.success());
    let manifest = fs::read_to_string(only_run(Path::new(out), "evaluate-").join("manifest.json")).unwrap();
    assert!(manifest.contains("\"policy\""));
    // the staged chain reproduces the one-shot pipeline
    assert!(scopal(&["--config", cfg, "--out", out, "pipeline"], &[]).status.success());
    let pipeline = only_run(Path::new(out), "pipeline-");
    assert_eq!(fs::read(pipeline.join("traj.jsonl")).unwrap(), fs::read(&traj).unwrap());
    assert_eq!(fs::read(pipeline.join("labeled.jsonl")).unwrap(), fs::read(&labeled).unwrap());
    assert_eq!(fs::read(pipeline.join("policy.ckpt")).unwrap(), fs::read(&ckpt).unwrap());
}
