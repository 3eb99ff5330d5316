use std::path::Path;
use std::process::{Command, Output};

fn geest(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geest")).args(args).current_dir(dir).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn study_writes_versioned_table() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("clustered.json"),
        r#"{
            "study": "clustered",
            "generator": {"M": 5, "n_m": 6},
            "learners": [{"family": "ols"}],
            "metrics": ["mse"],
            "resampling": [{"name": "grouped", "scheme": {"kind": "grouped_kfold", "k": 5}}],
            "replicates": 3,
            "seed": 1
        }"#,
    )
    .unwrap();
    let o = geest(&["study", "--config", "clustered.json", "--out", "r.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "#schema=1");
    assert_eq!(lines[1], "replicate,setting,method,estimate,true_ge");
    assert_eq!(lines.len(), 2 + 3);
    assert!(lines[2].starts_with("0,ols|mse,grouped,"));
    assert!(lines[2].ends_with(",NA"));
}

#[test]
fn split_is_deterministic_and_evaluate_checks_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = geest(&["simulate", "clustered", "--out", "data.csv", "--seed", "4"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    for out in ["a.txt", "b.txt"] {
        let o = geest(&["split", "--scheme", "grouped-kfold", "--k", "3", "--data", "data.csv", "--out", out, "--seed", "9"], d);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(d.join("a.txt")).unwrap(), std::fs::read(d.join("b.txt")).unwrap());

    let o = geest(&["evaluate", "--data", "data.csv", "--plan", "a.txt", "--learner", "ols", "--metric", "mse"], d);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("metric,estimate,splits,skipped\nmse,"));

    let text = std::fs::read_to_string(d.join("data.csv")).unwrap();
    let short: Vec<&str> = text.lines().take(12).collect();
    std::fs::write(d.join("short.csv"), short.join("\n")).unwrap();
    let o = geest(&["evaluate", "--data", "short.csv", "--plan", "a.txt", "--learner", "ols", "--metric", "mse"], d);
    assert!(!o.status.success());
    let msg = stderr(&o);
    assert!(msg.contains("100") && msg.contains("10"), "{msg}");
}

#[test]
fn design_weighted_evaluation_on_pps_sample() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("nsrs.json"), r#"{"N": 5000}"#).unwrap();
    assert!(geest(&["simulate", "nsrs", "--config", "nsrs.json", "--out", "s.csv"], d).status.success());
    for est in ["ht", "hajek"] {
        let o = geest(
            &["evaluate", "--data", "s.csv", "--scheme", "kfold", "--k", "5", "--learner", "ols", "--metric", "mse", "--design", "pi", "--estimator", est],
            d,
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    // set-based metrics cannot be design weighted
    let o = geest(&["evaluate", "--data", "s.csv", "--scheme", "kfold", "--k", "5", "--learner", "ols", "--metric", "f1_macro", "--design", "pi"], d);
    assert!(!o.status.success());
}

#[test]
fn hierarchical_simulation_round_trips_through_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("h.json"), r#"{"n_leaves": 6, "internal_nodes": 4, "n_train": 150}"#).unwrap();
    assert!(geest(&["simulate", "hierarchical", "--config", "h.json", "--out", "h.csv"], d).status.success());
    assert!(d.join("h.csv.tree").exists());
    let o = geest(
        &["evaluate", "--data", "h.csv", "--scheme", "stratified-kfold", "--k", "3", "--learner", "topdown:n_trees=10", "--metric", "accuracy", "--metric", "win", "--metric", "h_loss"],
        d,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 4);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(geest(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(geest(&["split", "--data", "x.csv", "--out", "p", "--bogus"], dir.path()).status.code(), Some(2));
    // scheme flag missing
    let o = geest(&["split", "--scheme", "kfold", "--data", "x.csv", "--out", "p"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--k"));
    // runtime failure: missing file
    let o = geest(&["split", "--scheme", "kfold", "--k", "2", "--data", "missing.csv", "--out", "p"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: "));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"study": "clustered", "generator": {}, "learners": [{"family": "ols"}], "metrics": ["mse"],
            "resampling": [{"name": "cv", "scheme": {"kind": "kfold", "k": 5}}], "replicate": 3, "out": "r.csv"}"#,
    )
    .unwrap();
    let o = geest(&["study", "--config", "c.json", "--out", "r.csv"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("replicate"));
}
