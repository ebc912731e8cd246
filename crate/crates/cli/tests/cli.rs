use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.conf");
    std::fs::write(&path, body).unwrap();
    path
}

fn relhf(sub: &str, config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relhf"))
        .arg(sub)
        .arg(config)
        .env("RELHF_THREADS", "1")
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const HELIUM: &str = "# helium on a small grid\nz = 2\nelectrons = 2\ngrid_size = 400\nr_max = 20\n";

#[test]
fn helium_solve_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), HELIUM);
    let out = relhf("solve", &config);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["report"]["converged"], Value::Bool(true));
    assert_eq!(report["certificate"]["passed"], Value::Bool(true));
    assert!(report["timestamp"].is_u64());

    let orbitals = std::fs::read_to_string(dir.path().join("out/orbitals.csv")).unwrap();
    let mut lines = orbitals.lines();
    assert_eq!(lines.next().unwrap(), "r,1s_spin0,1s_spin1");
    assert_eq!(lines.count(), 400);
    let trace = std::fs::read_to_string(dir.path().join("out/energy_trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,total,kinetic,nuclear,direct,exchange\n0,"));
}

#[test]
fn supercritical_config_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "z = 88\nelectrons = 1\n");
    let out = relhf("solve", &config);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("2/pi") || stderr.contains("critical"), "{stderr}");
}

#[test]
fn unknown_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "z = 2\nelectrons = 2\ngridsize = 100\n");
    let out = relhf("solve", &config);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gridsize"));
}

#[test]
fn iteration_cap_gives_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &format!("{HELIUM}max_iterations = 1\n"));
    let out = relhf("solve", &config);
    assert_eq!(out.status.code(), Some(2));
    let report = read_json(&dir.path().join("out/report.json"));
    assert_eq!(report["report"]["converged"], Value::Bool(false));
}

#[test]
fn decay_window_at_wall_is_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!(
        "{HELIUM}verify_kato = false\nverify_herbst = false\nverify_greens = false\nverify_certificate = false\ndecay_window_start = 16\ndecay_window_end = 19.5\n"
    );
    let config = write_config(dir.path(), &body);
    let out = relhf("verify", &config);
    assert_eq!(out.status.code(), Some(3));
    let verify = read_json(&dir.path().join("out/verify.json"));
    assert_eq!(verify["passed"], Value::Bool(false));
    assert_eq!(verify["suites"][0]["name"], "decay");
    assert_eq!(verify["suites"][0]["status"], "inconclusive");
}

#[test]
fn greens_only_verify_needs_no_solution() {
    let dir = tempfile::tempdir().unwrap();
    let body = "z = 2\nelectrons = 2\nverify_certificate = false\nverify_decay = false\nverify_kato = false\nverify_herbst = false\n";
    let config = write_config(dir.path(), body);
    let out = relhf("verify", &config);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let verify = read_json(&dir.path().join("out/verify.json"));
    let suites = verify["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 1);
    assert_eq!(suites[0]["name"], "greens");
    assert_eq!(suites[0]["status"], "pass");
}

#[test]
fn greens_subcommand_writes_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "z = 1\nelectrons = 1\n");
    let out = relhf("greens", &config);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/kernel.csv")).unwrap();
    assert!(csv.starts_with("u,G,term1,term2,term3\n"));
    assert!(read_json(&dir.path().join("out/greens.json"))["passed"].as_bool().unwrap());
}

#[test]
fn sweep_over_electron_number() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "z = 2\nelectrons = 2\ngrid_size = 300\n");
    let out = relhf("sweep", &config);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn bad_thread_count_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), HELIUM);
    let out = Command::new(env!("CARGO_BIN_EXE_relhf"))
        .args(["solve", config.to_str().unwrap()])
        .env("RELHF_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
