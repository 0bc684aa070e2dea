use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn afsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_afsim"))
        .args(args)
        .current_dir(dir)
        .env_remove("AFSIM_SEED")
        .output()
        .expect("binary runs")
}

fn scenario(secs: f64) -> String {
    let mut s = afsim_core::ScenarioConfig::reference(25_600, 8);
    s.general.duration_s = secs;
    s.to_toml_string()
}

#[test]
fn help_and_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(afsim(&["--help"], tmp.path()).status.code(), Some(0));
    assert_eq!(afsim(&["explode"], tmp.path()).status.code(), Some(1));
    assert_eq!(afsim(&["design", "--mode", "four-color", "--out", "x"], tmp.path()).status.code(), Some(1));
}

#[test]
fn run_writes_results_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), scenario(3.0)).unwrap();
    let out = afsim(&["run", "--config", "s.toml", "--out", "res", "--seed", "7"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(tmp.path().join("res/manifest.toml")).unwrap();
    assert!(manifest.contains("master_seed = 7"));
    assert!(manifest.contains("design_hash = "));
    assert!(manifest.contains("tool_version = "));
    let results = fs::read_to_string(tmp.path().join("res/results.csv")).unwrap();
    assert!(results.starts_with("simulation_id,row,customer,traffic,"));
}

#[test]
fn seed_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), scenario(1.0)).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_afsim"))
        .args(["run", "--config", "s.toml", "--out", "res"])
        .current_dir(tmp.path())
        .env("AFSIM_SEED", "4242")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let manifest = fs::read_to_string(tmp.path().join("res/manifest.toml")).unwrap();
    assert!(manifest.contains("master_seed = 4242"));
}

#[test]
fn config_errors_exit_one_with_field_names() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.toml"), scenario(1.0).replace("weight = 0.002", "weight = 0.0")).unwrap();
    let out = afsim(&["run", "--config", "bad.toml", "--out", "res"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("red.weight"));
    let out = afsim(&["run", "--config", "missing.toml", "--out", "res"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dry_run_lists_the_design() {
    let tmp = tempfile::tempdir().unwrap();
    let out = afsim(&["design", "--mode", "three-color", "--out", "d", "--dry-run"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("d/design.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2881);
    assert!(csv.lines().last().unwrap().starts_with("3720,76.8,"));
}

#[test]
fn report_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = afsim(
        &["design", "--mode", "two-color", "--out", "d", "--duration", "0.3", "--jobs", "1"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = afsim(&["report", "d", "--response", "fairness"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("d/report/anova-fairness.txt").exists());
    assert_eq!(afsim(&["report", "d", "--response", "latency"], tmp.path()).status.code(), Some(1));

    let results = tmp.path().join("d/results.csv");
    let text = fs::read_to_string(&results).unwrap();
    // header plus 18 complete runs of 11 rows
    let kept: Vec<&str> = text.lines().take(1 + 18 * 11).collect();
    fs::write(&results, kept.join("\n") + "\n").unwrap();
    let out = afsim(&["report", "d"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing simulation ids"));
    assert_eq!(afsim(&["report", "nowhere"], tmp.path()).status.code(), Some(2));
}
