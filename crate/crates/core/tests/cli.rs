use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use flowsense::output::read_manifest;

fn flowsense(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_flowsense"));
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("FLOWSENSE_THREADS", n),
        None => cmd.env_remove("FLOWSENSE_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn eval_defaults() {
    let o = flowsense(&["eval"], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("3.190611"));
    assert!(text.contains("A1 = 18  A2 = -6  A3 = 1"));
}

#[test]
fn eval_rejects_out_of_range_joa() {
    let o = flowsense(&["eval", "--joa", "0.5", "1.5"], None);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("--joa[1]"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"schema": "flowsense-config/1", "eval": {"joa": [-0.1]}}"#,
    );
    let o = flowsense(&["--config", &cfg, "eval"], None);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("eval.joa[0]"));
}

#[test]
fn config_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.json");
    let o = flowsense(&["--config", missing.to_str().unwrap(), "eval"], None);
    assert_eq!(code(&o), 2);

    let cfg = write_config(
        dir.path(),
        r#"{"schema": "flowsense-config/1", "perception": {"skill_prior_var": -1}}"#,
    );
    let o = flowsense(&["--config", &cfg, "eval"], None);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("perception.skill_prior_var"));

    let cfg = write_config(dir.path(), r#"{"seed": 3}"#);
    assert_eq!(code(&flowsense(&["--config", &cfg, "eval"], None)), 3);

    let cfg = write_config(dir.path(), r#"{"schema": "flowsense-config/1"}"#);
    assert_eq!(code(&flowsense(&["--config", &cfg, "eval"], None)), 0);
}

#[test]
fn figure5_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = flowsense(&["figure5", "--out", out.to_str().unwrap()], None);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let fa = fs::read(a.join("figure5.csv")).unwrap();
    assert_eq!(fa, fs::read(b.join("figure5.csv")).unwrap());
    let text = String::from_utf8(fa).unwrap();
    let gamma: Vec<f64> = text
        .lines()
        .filter(|l| l.starts_with("gamma"))
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    let expected = [0.761_577, 1.581_139, 3.190_611];
    for (h, e) in gamma.iter().zip(expected) {
        assert!((h - e).abs() < 1e-6);
    }
    assert!(read_manifest(&a).unwrap().verify(&a).unwrap().is_empty());
}

#[test]
fn figure5_zero_joa_has_no_skill_change() {
    let dir = tempfile::tempdir().unwrap();
    let o = flowsense(
        &[
            "figure5",
            "--joa",
            "0",
            "--format",
            "csv",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("figure5.csv")).unwrap();
    let row = text.lines().find(|l| l.starts_with("gamma")).unwrap();
    assert_eq!(row.split(',').nth(2), Some("0"));
    assert!(!dir.path().join("figure5.json").exists());
}

#[test]
fn optimize_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("opt");
    let o = flowsense(&["optimize", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let optimum = fs::read_to_string(out.join("optimum.csv")).unwrap();
    let row: Vec<&str> = optimum.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "1");
    assert!((row[2].parse::<f64>().unwrap() - 3.605_551).abs() < 1e-6);
    assert_eq!(row[3], "true");
    assert_eq!(
        fs::read_to_string(out.join("grid.csv"))
            .unwrap()
            .lines()
            .count(),
        202
    );

    let cfg = write_config(
        dir.path(),
        r#"{"schema": "flowsense-config/1", "band": {"t_low": 10, "t_high": 20, "h_min": 1}}"#,
    );
    let o = flowsense(
        &["--config", &cfg, "optimize", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("feasible = false"));

    let cfg = write_config(
        dir.path(),
        r#"{"schema": "flowsense-config/1", "optimizer": {"joa_range": {"lo": 0.9, "hi": 0.1}}}"#,
    );
    assert_eq!(code(&flowsense(&["--config", &cfg, "optimize"], None)), 3);
}

#[test]
fn experiment_needs_two_participants() {
    let dir = tempfile::tempdir().unwrap();
    let o = flowsense(
        &[
            "experiment",
            "--cohort",
            "1",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("insufficient participants for paired test"));
}

#[test]
fn experiment_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("t1");
    let b = dir.path().join("t8");
    let run = |out: &Path, threads| {
        let o = flowsense(
            &["experiment", "--seed", "7", "--out", out.to_str().unwrap()],
            Some(threads),
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        String::from_utf8(o.stdout).unwrap()
    };
    let headline = run(&a, "1");
    run(&b, "8");
    assert!(headline.starts_with("flow score, internal vs external JoA"));
    let (ma, mb) = (read_manifest(&a).unwrap(), read_manifest(&b).unwrap());
    assert_eq!(ma.files, mb.files);
    assert!(ma.verify(&a).unwrap().is_empty());
    let trials = fs::read_to_string(a.join("trials.csv")).unwrap();
    assert!(trials.starts_with("# flowsense-trials v1\nparticipant_id,session,trial,"));

    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    let flow = &report["internal_vs_external"][0];
    assert_eq!(flow["measure"], "flow_score");
    assert!(flow["test"]["p_two_sided"].as_f64().unwrap() < 0.01);
    assert!(flow["mean_a"].as_f64().unwrap() > flow["mean_b"].as_f64().unwrap());

    // Re-analysing the emitted records reproduces the report.
    let c = dir.path().join("analysis");
    let input = a.join("runs.jsonl");
    let o = flowsense(
        &[
            "analyze",
            "--input",
            input.to_str().unwrap(),
            "--out",
            c.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        fs::read(a.join("report.json")).unwrap(),
        fs::read(c.join("report.json")).unwrap()
    );
}

#[test]
fn study_cohort_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = flowsense(
        &[
            "experiment",
            "--cohort",
            "paper",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let runs = fs::read_to_string(dir.path().join("runs.jsonl")).unwrap();
    assert_eq!(runs.lines().count(), 11);
}

#[test]
fn analyze_reports_missing_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.jsonl");
    assert_eq!(
        code(&flowsense(
            &["analyze", "--input", missing.to_str().unwrap()],
            None
        )),
        2
    );
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"schema\": 1}\n").unwrap();
    assert_eq!(
        code(&flowsense(
            &["analyze", "--input", bad.to_str().unwrap()],
            None
        )),
        3
    );
}

#[test]
fn game_writes_trial_log() {
    let dir = tempfile::tempdir().unwrap();
    let o = flowsense(
        &[
            "game",
            "--trials",
            "50",
            "--width",
            "10",
            "--bonus",
            "5",
            "--rendering",
            "easy",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let log = fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(log.lines().count(), 52);
    assert!(log.lines().skip(2).all(|l| l.contains(",easy,")));
    let o = flowsense(&["game", "--width", "-1"], None);
    assert_eq!(code(&o), 3);
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = flowsense(
        &["experiment", "--out", dir.path().to_str().unwrap()],
        Some("zero"),
    );
    assert_eq!(code(&o), 3);
}
