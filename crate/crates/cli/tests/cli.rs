use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use quadtrack_core::config::RunManifest;
use quadtrack_core::csvlog::{parse_csv, HEADER};

fn quadtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadtrack")).args(args).output().expect("spawn quadtrack")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().expect("utf-8 path").to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn periodic_run_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run1");
    let o = quadtrack(&["run", "--scenario", "periodic", "--out", &out_arg(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = fs::read_to_string(out.join("log.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some(HEADER));
    let log = parse_csv(&csv).unwrap();
    assert_eq!(log.len(), 30_001);
    assert!(log.iter().all(|r| r.env_ok));

    let metrics = fs::read_to_string(out.join("metrics")).unwrap();
    assert!(metrics.contains("envelope_violations = 0"));
    let manifest = RunManifest::parse(&fs::read_to_string(out.join("manifest")).unwrap()).unwrap();
    assert_eq!(manifest.log_path, "log.csv");
    assert!(manifest.certification.contains("pass"));
}

#[test]
fn polynomial_without_internal_model() {
    let tmp = tempfile::tempdir().unwrap();
    let o = quadtrack(&[
        "run",
        "--scenario",
        "polynomial",
        "--internal-model",
        "off",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = fs::read_to_string(tmp.path().join("manifest")).unwrap();
    assert!(manifest.contains("internal_model = off"));
    assert!(manifest.contains("scenario = polynomial"));
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = quadtrack(&["run", "--preset", "fast", "--t-final", "4", "--out", &out_arg(&a)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = a.join("manifest");
    let o = quadtrack(&["run", "--config", &out_arg(&manifest), "--out", &out_arg(&b)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(a.join("log.csv")).unwrap(), fs::read(b.join("log.csv")).unwrap());
    assert_eq!(fs::read(a.join("manifest")).unwrap(), fs::read(b.join("manifest")).unwrap());
}

#[test]
fn negative_kappa_is_a_contract_fault() {
    let tmp = tempfile::tempdir().unwrap();
    let o = quadtrack(&["run", "--kappa", "-5", "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("kappa"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = quadtrack(&["run", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_config_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.conf");
    fs::write(&path, "[run]\nt_final = soon\n").unwrap();
    let o = quadtrack(&["run", "--config", &out_arg(&path), "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn missing_config_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("absent.conf");
    let o = quadtrack(&["certify", "--config", &out_arg(&path)]);
    assert_eq!(o.status.code(), Some(6));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = quadtrack(&["run", "--t-final", "0.01", "--out", &out_arg(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(6));
}

#[test]
fn uncertified_gains_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("flip.conf");
    fs::write(&path, "[controller]\nsign = as-given\n").unwrap();
    let o = quadtrack(&["certify", "--config", &out_arg(&path)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let o = quadtrack(&["run", "--config", &out_arg(&path), "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn tilted_seed_state_aborts_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = quadtrack(&[
        "run",
        "--t-final",
        "1",
        "--seed-state",
        "0,0,0,0,0.5,0,1.5699,5,0,0",
        "--out",
        &out_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
}

#[test]
fn seed_state_needs_ten_values() {
    let o = quadtrack(&["run", "--seed-state", "1,2,3"]);
    assert_eq!(o.status.code(), Some(2));
}
