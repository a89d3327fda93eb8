use std::path::Path;
use std::process::{Command, Output};

fn zkmip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zkmip")).args(args).output().unwrap()
}

fn small_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("zkmip.toml");
    let text = format!("[stats]\nsoundness_trials = 2000\ncompleteness_trials = 100\nsamples = 2000\n{extra}");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn sumcheck_writes_a_replayable_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let out = dir.path().join("t.jsonl");
    let o = zkmip(&["sumcheck", "--seed", "5", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let first = std::fs::read(&out).unwrap();
    let again = dir.path().join("u.jsonl");
    zkmip(&["sumcheck", "--seed", "5", "--config", &cfg, "--out", again.to_str().unwrap()]);
    assert_eq!(first, std::fs::read(&again).unwrap());
    let r = zkmip(&["replay", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stdout));
}

#[test]
fn failing_checks_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // a large negative slack puts the soundness threshold below the observed cheating rate
    let cfg = small_config(dir.path(), "slack_sigma = -1000.0\n");
    let o = zkmip(&["sumcheck", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn bad_input_exits_two() {
    assert_eq!(zkmip(&["field", "--field", "F6"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "bogus = 1\n");
    assert_eq!(zkmip(&["field", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn other_commands_pass() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[zksumcheck]\ndegs = [2]\nk = 1\nlambda = 1\nbudget = 2\n");
    for args in [
        vec!["field", "--field", "GF2^8"],
        vec!["aqc", "verify", "--suite", "closed-forms"],
        vec!["lift", "run", "--inner", "sumcheck", "--mode", "fast", "--trials", "50"],
        vec!["zk-test", "--target", "weak", "--mode", "exhaustive", "--field", "F3"],
        vec!["zk-test", "--target", "commit", "--mode", "chi2", "--samples", "20000"],
        vec!["ldt"],
    ] {
        let mut full = args.clone();
        full.extend(["--config", &cfg]);
        let o = zkmip(&full);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr));
    }
}
