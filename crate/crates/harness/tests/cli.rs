use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_arstage"))
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let o = bin().args(args).output().unwrap();
    (o.status.code().unwrap(), String::from_utf8(o.stdout).unwrap(), String::from_utf8(o.stderr).unwrap())
}

const THEATER: &str = r#"{
  "version": 1, "name": "play", "seed": 4, "dt": 0.05, "duration": 600,
  "walker": { "kind": "waypoint" },
  "scenario": { "kind": "theater" }
}"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_report_then_verify() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "play.json", THEATER);
    let out = tmp.path().join("out");
    let (code, stdout, _) = run(&["simulate", "--config", s(&cfg), "--out", s(&out), "--label", "one"]);
    assert_eq!(code, 0);
    let dir = out.join("play").join("one");
    assert_eq!(stdout.trim(), dir.to_str().unwrap());
    assert_eq!(run(&["report", s(&dir)]).0, 0);
    let (code, stdout, _) = run(&["verify", s(&dir)]);
    assert_eq!(code, 0, "{stdout}");

    std::fs::write(dir.join("trace.csv"), "tampered").unwrap();
    let (code, _, stderr) = run(&["verify", s(&dir)]);
    assert_eq!(code, 1);
    assert!(stderr.contains("mismatch: trace.csv"));
}

#[test]
fn seed_flag_overrides_config_and_runs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "w.json",
        r#"{"version": 1, "name": "w", "seed": 1, "dt": 0.05, "duration": 30,
            "walker": {"kind": "wander"}, "scenario": {"kind": "bubbles"}}"#,
    );
    let out = s(tmp.path());
    for label in ["a", "b", "c"] {
        let seed = if label == "c" { "2" } else { "1" };
        assert_eq!(run(&["simulate", "--config", s(&cfg), "--out", out, "--label", label, "--seed", seed]).0, 0);
    }
    let read = |l: &str| std::fs::read(tmp.path().join("w").join(l).join("manifest.json")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write(tmp.path(), "u.json", &THEATER.replace("\"seed\": 4", "\"seed\": 4, \"colour\": 1"));
    let no_seed = write(tmp.path(), "n.json", &THEATER.replace("\"seed\": 4,", ""));
    let fast = write(tmp.path(), "f.json", &THEATER.replace("\"kind\": \"waypoint\"", "\"kind\": \"waypoint\", \"speed\": 3.5"));
    let missing_sheet =
        write(tmp.path(), "m.json", &THEATER.replace("{ \"kind\": \"theater\" }", "{ \"kind\": \"theater\", \"cue_sheet\": \"nope.json\" }"));
    for cfg in [&unknown, &no_seed, &fast, &missing_sheet] {
        let (code, _, stderr) = run(&["simulate", "--config", s(cfg), "--out", s(tmp.path())]);
        assert_eq!(code, 2, "{}: {stderr}", cfg.display());
    }
    assert_eq!(run(&["simulate", "--config", s(&tmp.path().join("absent.json"))]).0, 2);
    let rollout = write(
        tmp.path(),
        "r.json",
        r#"{"version": 1, "name": "r", "seed": 1, "dt": 0.2, "duration": 90, "scenario": {"kind": "rollout"}}"#,
    );
    assert_eq!(run(&["simulate", "--config", s(&rollout), "--out", s(tmp.path())]).0, 2);
}

#[test]
fn scene_errors_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = write(tmp.path(), "venue.json", "{\"version\": 1, \"walls\": 7}");
    let cfg = write(tmp.path(), "play.json", &THEATER.replace("\"seed\": 4,", "\"seed\": 4, \"scene\": \"venue.json\","));
    assert_eq!(run(&["simulate", "--config", s(&cfg), "--out", s(tmp.path())]).0, 3);
    assert_eq!(run(&["trace", "--config", s(&scene), "--out", s(tmp.path())]).0, 3);
}

#[test]
fn training_divergence_exits_with_four() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "t.json",
        r#"{"version": 1, "name": "t", "seed": 1, "dt": 0.2, "duration": 90,
            "scenario": {"kind": "train", "eval_episodes": 1,
                         "ppo": {"n_envs": 2, "horizon": 16, "minibatch": 16, "learning_rate": 1e300}}}"#,
    );
    let (code, _, stderr) = run(&["train", "--config", s(&cfg), "--out", s(tmp.path()), "--steps", "128"]);
    assert_eq!(code, 4, "{stderr}");
}

#[test]
fn short_training_run_then_rollout_of_its_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "t.json",
        r#"{"version": 1, "name": "t", "seed": 1, "dt": 0.2, "duration": 90,
            "scenario": {"kind": "train", "eval_episodes": 2, "candidates": 2,
                         "ppo": {"n_envs": 2, "horizon": 32, "minibatch": 32}}}"#,
    );
    let (code, _, stderr) = run(&["train", "--config", s(&cfg), "--out", s(tmp.path()), "--label", "x", "--steps", "256"]);
    assert_eq!(code, 0, "{stderr}");
    let trained = tmp.path().join("t").join("x");
    assert!(trained.join("candidates/cand-01/policy.bin").exists());
    assert_eq!(run(&["report", s(&trained)]).0, 0);
    assert!(trained.join("report/reward.svg").exists());

    let roll = write(
        tmp.path(),
        "r.json",
        &format!(
            r#"{{"version": 1, "name": "r", "seed": 3, "dt": 0.2, "duration": 90,
                "walker": {{"kind": "policy", "checkpoint": "{}"}},
                "scenario": {{"kind": "rollout"}}}}"#,
            s(&trained.join("policy.bin"))
        ),
    );
    let (code, _, stderr) = run(&["rollout", "--config", s(&roll), "--out", s(tmp.path()), "--label", "y", "--episodes", "3"]);
    assert_eq!(code, 0, "{stderr}");
    let dir = tmp.path().join("r").join("y");
    assert!(dir.join("traces/episode-002.csv").exists());
    assert!(!dir.join("traces/episode-003.csv").exists());
    let (code, stdout, _) = run(&["report", s(&dir)]);
    assert_eq!(code, 0);
    assert!(stdout.contains("\"consistent\": true"));
}

#[test]
fn trace_writes_an_obj_venue() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/venue.json");
    let (code, stdout, stderr) = run(&["trace", "--config", s(&scene), "--out", s(tmp.path()), "--label", "v"]);
    assert_eq!(code, 0, "{stderr}");
    let dir = PathBuf::from(stdout.trim());
    let obj = std::fs::read_to_string(dir.join("venue.obj")).unwrap();
    assert!(obj.lines().any(|l| l.starts_with("f ")));
    assert_eq!(run(&["verify", s(&dir)]).0, 0);
}
