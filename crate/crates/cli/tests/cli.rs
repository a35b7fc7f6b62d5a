use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cascadekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascadekit")).args(args).env_remove("CASCADEKIT_CONFIG").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cascadekit(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analysis_commands_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("good.jsonl");
    let pricing = configs().join("pricing.json");
    let synth_cfg = configs().join("synth_good_signal.json");

    ok(&["synth", "--config", s(&synth_cfg), "--seed", "1", "--out", s(&data)]);
    let summary: serde_json::Value = serde_json::from_str(&ok(&["validate", s(&data)])).unwrap();
    assert_eq!(summary["decisions"], 2100);
    assert_eq!(summary["distinct_confidence_values"], 13);

    let sweep_csv = dir.path().join("sweep.csv");
    ok(&["sweep", s(&data), "--pricing", s(&pricing), "--out", s(&sweep_csv)]);
    let sweep = std::fs::read_to_string(&sweep_csv).unwrap();
    assert!(sweep.starts_with("tau,n,n_escalated,escalation_rate,kappa"));
    assert_eq!(sweep.lines().count(), 100);

    let op: serde_json::Value = serde_json::from_str(&ok(&["select", s(&data), "--pricing", s(&pricing)])).unwrap();
    assert_eq!(op["rule_fired"], "within_delta");
    let tau = op["point"]["tau"].as_f64().unwrap();
    // the selected row is one of the sweep rows
    assert!(sweep.lines().any(|l| l.starts_with(&format!("{tau},"))));

    let cv: serde_json::Value = serde_json::from_str(&ok(&["cv", s(&data), "--pricing", s(&pricing), "--k", "5", "--seed", "3"])).unwrap();
    assert_eq!(cv["folds"].as_array().unwrap().len(), 5);
    assert_eq!(cv["stratified_on"], "majority_label");

    let lift: serde_json::Value = serde_json::from_str(&ok(&["lift", s(&data), "--tau", &tau.to_string()])).unwrap();
    assert!(lift["separation"].as_f64().unwrap() > 0.0);

    let diff_csv = dir.path().join("difficulty.csv");
    ok(&["difficulty", s(&data), "--out", s(&diff_csv)]);
    let diff = std::fs::read_to_string(&diff_csv).unwrap();
    assert!(diff.starts_with("decision_id,category,difficulty\n"));
    assert_eq!(diff.lines().count(), 2101);
}

#[test]
fn report_exit_code_follows_requested_tables() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    ok(&["synth", "--config", s(&configs().join("synth_degenerate.json")), "--out", s(&data)]);
    let missing = dir.path().join("no-pricing.json");
    let quick = ["--resamples", "200"];

    let out_ok = dir.path().join("run-a");
    let mut args = vec!["report", s(&data), "--pricing", s(&missing), "--out", s(&out_ok), "--tables", "4,5,15"];
    args.extend(quick);
    ok(&args);
    assert!(out_ok.join("table05_discrimination.csv").exists());
    assert!(!out_ok.join("table08_cost.csv").exists());

    let out_bad = dir.path().join("run-b");
    let mut args = vec!["report", s(&data), "--pricing", s(&missing), "--out", s(&out_bad), "--tables", "5,8"];
    args.extend(quick);
    let failed = cascadekit(&args);
    assert!(!failed.status.success());
    assert!(String::from_utf8_lossy(&failed.stderr).contains("table08_cost"));
    assert!(out_bad.join("report.json").exists());
}

#[test]
fn bad_inputs_fail_cleanly() {
    let out = cascadekit(&["validate", "/nonexistent/decisions.jsonl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: loading /nonexistent/decisions.jsonl"));

    let out = cascadekit(&["serve"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("CASCADEKIT_CONFIG"));
}

#[test]
fn sample_router_config_loads() {
    let config = cascadekit_router::RouterConfig::load(configs().join("router.toml")).unwrap();
    assert_eq!(config.tau, 0.41);
    assert!(config.backends().is_ok());
}
