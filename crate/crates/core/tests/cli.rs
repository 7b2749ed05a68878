use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use potts::cli::{content_hash, run_file, RunOptions, Task};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn potts(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_potts")).args(args).output().expect("spawn potts").status.code().expect("exit code")
}

/// CSV rows with the `wall_ms` column dropped.
fn rows_without_wall(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let wall = header.iter().position(|h| *h == "wall_ms");
    lines
        .map(|l| l.split(',').enumerate().filter(|(i, _)| Some(*i) != wall).map(|(_, c)| c.to_string()).collect())
        .collect()
}

#[test]
fn reruns_reproduce_rows() {
    let dir = tempfile::tempdir().unwrap();
    for (task, file) in [(Task::ParisiEval, "parisi-eval.json"), (Task::Maxcut, "maxcut-triangle.json"), (Task::SampleGraph, "sample-graph.json")] {
        let a_dir = dir.path().join("a");
        let b_dir = dir.path().join("b");
        let a = run_file(task, &configs().join(file), &RunOptions { seed: None, out: Some(a_dir.clone()) }).unwrap();
        let b = run_file(task, &configs().join(file), &RunOptions { seed: None, out: Some(b_dir.clone()) }).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        assert_eq!(rows_without_wall(&a.csv), rows_without_wall(&b.csv), "{file}");
        for row in rows_without_wall(&a.csv) {
            assert_eq!(row[0], a.config_hash);
        }
        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&a.summary).unwrap()).unwrap();
        assert_eq!(summary["config_hash"], a.config_hash.as_str());
        assert_eq!(summary["task"], task.name());
    }
}

#[test]
fn sampled_graph_is_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = configs().join("sample-graph.json");
    let a = run_file(Task::SampleGraph, &path, &RunOptions { seed: None, out: Some(dir.path().join("a")) }).unwrap();
    let b = run_file(Task::SampleGraph, &path, &RunOptions { seed: None, out: Some(dir.path().join("b")) }).unwrap();
    assert_eq!(a.config_hash, b.config_hash);
    let file = format!("sample-graph-{}.edges", a.config_hash);
    let ea = fs::read(dir.path().join("a").join(&file)).unwrap();
    let eb = fs::read(dir.path().join("b").join(&file)).unwrap();
    assert_eq!(content_hash(&ea), content_hash(&eb));
}

#[test]
fn rerun_replaces_its_own_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = configs().join("parisi-eval.json");
    let opts = RunOptions { seed: None, out: Some(dir.path().to_path_buf()) };
    let first = run_file(Task::ParisiEval, &path, &opts).unwrap();
    run_file(Task::ParisiEval, &path, &opts).unwrap();
    assert_eq!(rows_without_wall(&first.csv).len(), 1);
    // a different seed is a different config, so its row is appended
    let other = run_file(Task::ParisiEval, &path, &RunOptions { seed: Some(3), ..opts }).unwrap();
    assert_ne!(other.config_hash, first.config_hash);
    assert_eq!(rows_without_wall(&first.csv).len(), 2);
}

#[test]
fn content_hash_matches_git() {
    // empty blob id of a sha256 git repository
    assert_eq!(content_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = |f: &str| configs().join(f).to_string_lossy().to_string();

    assert_eq!(potts(&["maxcut", "--config", &cfg("maxcut-triangle.json"), "--out", out]), 0);
    assert_eq!(potts(&["verify", "--config", &cfg("verify-cut-oracle.json"), "--out", out]), 0);
    // usage errors
    assert_eq!(potts(&["nonsense", "--config", &cfg("maxcut-triangle.json")]), 2);
    assert_eq!(potts(&["maxcut"]), 2);
    assert_eq!(potts(&["parisi-eval", "--config", &cfg("maxcut-triangle.json"), "--out", out]), 2);
    assert_eq!(potts(&["maxcut", "--config", &dir.path().join("missing.json").to_string_lossy(), "--out", out]), 2);

    let unknown_suite = dir.path().join("suite.json");
    fs::write(&unknown_suite, r#"{"task":"verify","suite":"nope"}"#).unwrap();
    assert_eq!(potts(&["verify", "--config", unknown_suite.to_str().unwrap(), "--out", out]), 2);

    // a zero-width Monte Carlo band cannot pass
    let failing = dir.path().join("failing.json");
    fs::write(
        &failing,
        r#"{"task":"verify","suite":"rpc-oracle","suite_params":{"instances":1,"samples":50,"truncation":8,"sigmas":0.0}}"#,
    )
    .unwrap();
    assert_eq!(potts(&["verify", "--config", failing.to_str().unwrap(), "--out", out]), 1);

    let bad_threads = Command::new(env!("CARGO_BIN_EXE_potts"))
        .args(["maxcut", "--config", &cfg("maxcut-triangle.json"), "--out", out])
        .env("POTTS_THREADS", "zero")
        .status()
        .unwrap();
    assert_eq!(bad_threads.code(), Some(2));
    let one_thread = Command::new(env!("CARGO_BIN_EXE_potts"))
        .args(["maxcut", "--config", &cfg("maxcut-triangle.json"), "--out", out])
        .env("POTTS_THREADS", "1")
        .status()
        .unwrap();
    assert_eq!(one_thread.code(), Some(0));
}
