use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn qeeg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qeeg")).current_dir(dir).args(args).output().unwrap()
}

fn small_study(dir: &Path, extra: Value) {
    let mut cfg = json!({
        "output_dir": "out",
        "seed": 3,
        "validation": {"min_seconds": 5.0},
        "simulate": {"template": {"duration_s": 8.0, "quantum_uv": 0.001}},
        "predict": {"repeats": 1, "classifiers": ["nmsc", "knn3"]}
    });
    if let (Some(base), Some(extra)) = (cfg.as_object_mut(), extra.as_object()) {
        for (k, v) in extra {
            base.insert(k.clone(), v.clone());
        }
    }
    fs::write(dir.join("study.json"), cfg.to_string()).unwrap();
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn broken_recordings_are_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_study(dir, json!({}));
    assert_eq!(qeeg(dir, &["--config", "study.json", "simulate"]).status.code(), Some(0));

    fs::remove_file(dir.join("out/data/A001_baseline.json")).unwrap();
    fs::write(dir.join("out/data/B001_post240.csv"), "time_s,Fp1,Fp2,AF7,AF8\n0,1,2,x,4\n").unwrap();

    let out = qeeg(dir, &["--config", "study.json", "features"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    let errors = read_json(&dir.join("out/feature_errors.json"));
    let errors = errors.as_array().unwrap();
    assert_eq!(errors.len(), 2);
    assert!(errors[0]["recording_csv"].as_str().unwrap().ends_with("A001_baseline.csv"));
    assert_eq!(errors[1]["subject_id"], "B001");

    let table = fs::read_to_string(dir.join("out/features.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 110 - 2);

    // downstream stages still run on what survived
    assert_eq!(qeeg(dir, &["--config", "study.json", "stats"]).status.code(), Some(0));
    assert_eq!(qeeg(dir, &["--config", "study.json", "predict"]).status.code(), Some(0));
}

#[test]
fn empty_cohort_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    small_study(tmp.path(), json!({"simulate": {"n_per_group": {}}}));
    let out = qeeg(tmp.path(), &["--config", "study.json", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("out/manifest.json").exists());
}

#[test]
fn unknown_keys_and_bad_values_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("typo.json"), r#"{"seeed": 1}"#).unwrap();
    assert_eq!(qeeg(tmp.path(), &["--config", "typo.json", "stats"]).status.code(), Some(2));
    fs::write(tmp.path().join("bad.json"), r#"{"responder": {"threshold": 2.0}}"#).unwrap();
    assert_eq!(qeeg(tmp.path(), &["--config", "bad.json", "stats"]).status.code(), Some(2));
    assert_eq!(qeeg(tmp.path(), &["--config", "missing.json", "stats"]).status.code(), Some(2));
    assert_eq!(qeeg(tmp.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_inputs_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qeeg(tmp.path(), &["--out", "run", "features"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest"));
    assert_eq!(qeeg(tmp.path(), &["--out", "run", "predict"]).status.code(), Some(1));
}

#[test]
fn seed_override_changes_the_cohort_and_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_study(dir, json!({}));
    for (seed, out) in [("3", "a"), ("4", "b")] {
        let o = qeeg(dir, &["--config", "study.json", "--seed", seed, "--out", out, "simulate"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let eff = read_json(&dir.join("b/effective_config.json"));
    assert_eq!(eff["seed"], 4);
    assert_eq!(eff["simulate"]["seed"], 4);
    assert_eq!(eff["output_dir"], "b");
    assert_ne!(
        fs::read(dir.join("a/data/A001_baseline.csv")).unwrap(),
        fs::read(dir.join("b/data/A001_baseline.csv")).unwrap()
    );

    // the effective config reproduces the run
    fs::copy(dir.join("a/effective_config.json"), dir.join("again.json")).unwrap();
    let before = fs::read(dir.join("a/cohort.csv")).unwrap();
    assert_eq!(qeeg(dir, &["--config", "again.json", "simulate"]).status.code(), Some(0));
    assert_eq!(fs::read(dir.join("a/cohort.csv")).unwrap(), before);
}

#[test]
fn full_chain_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_study(dir, json!({"simulate": {"theta_deficit": 0.5, "template": {"duration_s": 8.0}}}));
    for c in ["simulate", "features", "stats", "predict", "report"] {
        let o = qeeg(dir, &["--config", "study.json", c]);
        assert_eq!(o.status.code(), Some(0), "{c}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let out = dir.join("out");
    let stats = read_json(&out.join("stats.json"));
    assert_eq!(stats["results"].as_array().unwrap().len(), 64 + 72);
    let pred = read_json(&out.join("predict.json"));
    assert_eq!(pred["grid"].as_array().unwrap().len(), 2 * 3);
    assert_eq!(pred["responders"], 16);
    let svg = fs::read_to_string(out.join("predict.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("theta+lowalpha"));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.lines().any(|l| l.starts_with("A ") && l.contains("18")));
}
