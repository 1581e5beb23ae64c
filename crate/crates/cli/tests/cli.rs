use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vmsflow"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = "\
# small two-dimensional run
formulation = glsdd
dim = 2
elements = 6
reynolds = 200
max_steps = 3
";

fn run_small(dir: &Path, extra: &[&str]) -> Output {
    let cfg = write_config(dir, SMALL);
    let out = dir.join("out");
    bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn run_writes_history_with_documented_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), &["--checkpoint-every", "1", "--deterministic-reductions"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("out/history.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,E_h,E_prime,E_cross,E_total,D_visc,D_small,fraction,div_max,mom_x,mom_y,mom_z,"));
    assert_eq!(csv.lines().count(), 5);
    assert!(dir.path().join("out/checkpoint_000003.bin").exists());
}

#[test]
fn missing_formulation_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dim = 2\nelements = 6\n");
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("formulation"));
}

#[test]
fn malformed_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "formulation = glsdd\ndim = 2\nelements six\n");
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn bad_override_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), &["--set", "elements=lots"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_small(dir.path(), &["--set", "no_such_key=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_one_and_keeps_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(
        dir.path(),
        &["--checkpoint-every", "1", "--set", "max_correctors=1", "--set", "nonlinear_tol=1e-30", "--set", "nonlinear_abs_tol=1e-300"],
    );
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/history.csv").exists());
}

#[test]
fn restart_and_budget_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_small(dir.path(), &["--checkpoint-every", "2", "--set", "max_steps=2"]);
    assert!(out.status.success());
    let ck = dir.path().join("out/checkpoint_000002.bin");
    let replay = bin().arg("budget-replay").arg(&ck).output().unwrap();
    assert!(replay.status.success());
    let text = String::from_utf8_lossy(&replay.stdout);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("t,E_h,"));
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());

    let resumed = bin()
        .args(["run", "--restart"])
        .arg(&ck)
        .args(["--set", "max_steps=4"])
        .output()
        .unwrap();
    assert!(resumed.status.success(), "{}", String::from_utf8_lossy(&resumed.stderr));
    assert!(String::from_utf8_lossy(&resumed.stdout).contains("completed 2 steps"));
}

#[test]
fn verify_reports_pass_lines() {
    let out = bin().args(["verify", "skew-jacobian"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("suite skew-jacobian: PASS"));
    assert!(text.lines().filter(|l| l.contains("[PASS]")).count() >= 10);
}

#[test]
fn unknown_suite_is_rejected() {
    let out = bin().args(["verify", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_without_config_is_a_config_error() {
    let out = bin().arg("run").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
