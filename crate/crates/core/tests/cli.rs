//! End-to-end runs of the `plaplace` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn plaplace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plaplace")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn solve(dir: &TempDir, config: &str) -> (Output, String) {
    let cfg = write_config(dir.path(), "run.json", config);
    let out = dir.path().join("run");
    let o = plaplace(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()]);
    (o, out.join("u.json").to_str().unwrap().to_string())
}

const DISK: &str = r#"{"domain.kind": "disk", "domain.radius": 1.0, "problem.p": 2.0, "grid.h": 0.03125}"#;

#[test]
fn solve_and_diagnose_disk() {
    let dir = TempDir::new().unwrap();
    let (o, ckpt) = solve(&dir, DISK);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run = dir.path().join("run");
    for f in ["u.json", "u.bin", "solve.json", "u.svg"] {
        assert!(run.join(f).is_file(), "missing {f}");
    }

    let diag = dir.path().join("diag");
    let o = plaplace(&["diagnose", &ckpt, "--select", "symmetry,pucci", "--ball-threshold", "0.05", "--out", diag.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report: Value = serde_json::from_str(&fs::read_to_string(diag.join("diagnostics.json")).unwrap()).unwrap();
    let spread = report["symmetry"]["score"]["spread"].as_f64().unwrap();
    assert!(spread < 0.05, "spread {spread}");
    assert!(diag.join("trace.csv").is_file() && diag.join("identity.csv").is_file());
}

#[test]
fn ellipse_is_not_a_ball() {
    let dir = TempDir::new().unwrap();
    let (o, ckpt) = solve(&dir, r#"{"domain.kind": "ellipse", "domain.semi_x": 1.5, "domain.semi_y": 1.0, "problem.p": 3.0, "grid.h": 0.015625}"#);
    assert_eq!(code(&o), 0);
    let diag = dir.path().join("diag");
    let o = plaplace(&["diagnose", &ckpt, "--select", "symmetry", "--ball-threshold", "0.02", "--out", diag.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn unconverged_solve_exits_2() {
    let dir = TempDir::new().unwrap();
    let (o, ckpt) = solve(&dir, r#"{"domain.kind": "disk", "domain.radius": 1.0, "problem.p": 2.0, "grid.h": 0.0625, "solver.max_iterations": 1}"#);
    assert_eq!(code(&o), 2);
    // the partial iterate is still checkpointed
    assert!(Path::new(&ckpt).is_file());
}

#[test]
fn misspelled_key_names_its_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "bad.json", "{\n  \"domain.kind\": \"disk\",\n  \"solver.epsilonn\": 0.1\n}\n");
    let o = plaplace(&["solve", "--config", &cfg]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("epsilonn") && err.contains("line 3"), "{err}");
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let dir = TempDir::new().unwrap();
    let (o, ckpt) = solve(&dir, r#"{"domain.kind": "disk", "domain.radius": 1.0, "problem.p": 2.0, "grid.h": 0.0625}"#);
    assert_eq!(code(&o), 0);
    let sidecar = Path::new(&ckpt).with_extension("bin");
    let bytes = fs::read(&sidecar).unwrap();
    let out = dir.path().join("diag");

    fs::write(&sidecar, &bytes[..bytes.len() / 2]).unwrap();
    assert_eq!(code(&plaplace(&["diagnose", &ckpt, "--out", out.to_str().unwrap()])), 1);

    let mut bad = bytes.clone();
    bad[0] = b'X';
    fs::write(&sidecar, &bad).unwrap();
    assert_eq!(code(&plaplace(&["diagnose", &ckpt, "--out", out.to_str().unwrap()])), 1);

    fs::write(&sidecar, &bytes).unwrap();
    assert_eq!(code(&plaplace(&["diagnose", &ckpt, "--select", "pucci", "--out", out.to_str().unwrap()])), 0);
}

#[test]
fn reproduce_names() {
    let o = plaplace(&["reproduce", "no-such-experiment"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("radial-convergence"));

    let dir = TempDir::new().unwrap();
    let o = plaplace(&["reproduce", "envelope-table", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("envelope-table.json").is_file());
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&plaplace(&["frobnicate"])), 1);
    assert_eq!(code(&plaplace(&["diagnose", "x.json", "--select", "everything"])), 1);
    assert_eq!(code(&plaplace(&["--help"])), 0);
}
