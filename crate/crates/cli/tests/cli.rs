use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use besselflow::experiments::{Experiment, ExperimentConfig};

fn besselflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_besselflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn shipped_configs_are_the_defaults() {
    for e in Experiment::ALL {
        let text = fs::read_to_string(shipped(&format!("{e}.conf"))).unwrap();
        let cfg = ExperimentConfig::parse(&text, Some(e), None).unwrap();
        assert_eq!(cfg, ExperimentConfig::default_for(e, 42), "{e}");
    }
}

#[test]
fn verify_scaling_with_the_shipped_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let config = shipped("exp_scaling.conf");
    let o = besselflow(&["verify", "exp_scaling", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("exp_scaling.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], "besselflow-report/1");
    assert_eq!(report["passed"], true);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["reports"][0], "exp_scaling.json");
}

#[test]
fn unknown_key_is_a_usage_error_on_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "bad.conf", "experiment = exp_scaling\nseed = 1\n\ndleta = 2.5\n");
    let o = besselflow(&["verify", "exp_scaling", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("bad.conf:4:"), "{msg}");
    assert!(msg.contains("dleta"), "{msg}");
}

#[test]
fn tau0_rejects_dimensions_outside_one_to_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "tau.conf", "experiment = exp_tau0_law\nseed = 3\ndelta = 0.5\n");
    let o = besselflow(&["verify", "exp_tau0_law", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("δ ∈ (1, 2)"), "{}", stderr(&o));
}

#[test]
fn failed_checks_exit_one_and_still_write_the_report() {
    // At the first zero for δ = 1.75 the literal ratio collapses to 0.
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "chain.conf",
        "experiment = exp_ratio_chain\nseed = 5\ndelta = 1.75\norder = 2\nxs = 1\nscales = 0.01\nhorizon = 1e12\nn_paths = 60\nscheme = implicit-drift\n",
    );
    let o = besselflow(&["verify", "exp_ratio_chain", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("exp_ratio_chain.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "law.conf", "seed = 1\nn_paths = 5\nnu = 0.5\n");
    let c = config.to_str().unwrap();
    let read = |d: &Path| fs::read_to_string(d.join("gamma.csv")).unwrap();
    let (a, b, f) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("f"));
    assert_eq!(besselflow(&["laws", "gamma", "--config", c], &a).status.code(), Some(0));
    assert_eq!(besselflow(&["laws", "gamma", "--config", c, "--seed", "1"], &b).status.code(), Some(0));
    assert_eq!(besselflow(&["laws", "gamma", "--config", c, "--seed", "2"], &f).status.code(), Some(0));
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&f));
    assert!(read(&a).starts_with("draw_id,value,cdf\n"));
    assert_eq!(read(&a).lines().count(), 6);
}

#[test]
fn unknown_law_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = besselflow(&["laws", "cauchy"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gamma"), "{}", stderr(&o));
}

#[test]
fn simulate_writes_long_format_csv_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "sim.conf",
        "seed = 9\ndelta = 2.5\nxs = 0.5, 1\nhorizon = 1\nn_steps = 8\nn_paths = 3\nscheme = implicit-drift\n",
    );
    let c = config.to_str().unwrap();
    let (one, four) = (dir.path().join("one"), dir.path().join("four"));
    assert_eq!(besselflow(&["simulate", "--config", c, "--workers", "1"], &one).status.code(), Some(0));
    assert_eq!(besselflow(&["simulate", "--config", c, "--workers", "4"], &four).status.code(), Some(0));
    let a = fs::read_to_string(one.join("samples.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(four.join("samples.csv")).unwrap());
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("path_id,x0,t,value"));
    // 3 paths × 2 starting points × 9 nodes.
    assert_eq!(lines.count(), 54);
    assert!(!a.contains('\r'));
}

#[test]
fn simulate_rejects_a_bad_mode_on_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "sim.conf", "seed = 9\nmode = paused\n");
    let o = besselflow(&["simulate", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.conf:2:"), "{}", stderr(&o));
}

#[test]
fn suite_rejects_unknown_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "suite.conf", "criteria = 1, 13\n");
    let o = besselflow(&["suite", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn suite_subset_writes_reports_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "suite.conf", "seed = 42\ncriteria = 1\n");
    let o = besselflow(&["suite", "--config", config.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("criterion  1: PASS"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema"], "besselflow-manifest/1");
    assert_eq!(manifest["criteria"][0]["report"], "criterion_01.json");
    assert!(dir.path().join("criterion_01.json").exists());
}
