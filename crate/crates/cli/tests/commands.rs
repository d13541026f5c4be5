use std::path::{Path, PathBuf};
use std::process::Command;

use dihedral_cli::commands::SweepTable;
use dihedral_cli::formats::{read_json, EstimateRecord, Manifest, OrbitFile, VerificationRecord};
use dihedral_cli::run;
use dihedral_core::estimates::total_collision_lower_bound;
use dihedral_core::SymmetryParams;

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("dihedral").chain(args.iter().copied()))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest_of(out: &Path) -> Manifest {
    read_json(&dihedral_cli::formats::manifest_path(out)).unwrap()
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dihedral"))
}

#[test]
fn estimate_n4_s1_holds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("est.json");
    assert_eq!(cli(&["estimate", "--n", "4", "--s", "1", "--out", path_str(&out)]), 0);
    let r: EstimateRecord = read_json(&out).unwrap();
    assert!(r.verdict);
    assert!((r.b - 30.645197).abs() < 1e-5);
    let m = manifest_of(&out);
    assert_eq!((m.status.as_str(), m.exit_code), ("ok", 0));
    assert_eq!(m.outputs, vec![out.clone()]);
    assert_eq!(m.config["n"], 4);
}

#[test]
fn estimate_eight_body_loop() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("e8.json");
    assert_eq!(cli(&["estimate", "--n", "8", "--s", "2", "--remark8", "--out", path_str(&out)]), 0);
    let r: EstimateRecord = read_json(&out).unwrap();
    assert!(r.verdict && r.a_bound < r.b);
    assert_eq!(r.test_loop, "spherical_n8");
    assert_eq!(cli(&["estimate", "--n", "6", "--s", "1", "--remark8", "--out", path_str(&out)]), 2);
}

#[test]
fn estimate_rejects_twist_above_half_l() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.json");
    assert_eq!(cli(&["estimate", "--n", "4", "--s", "2", "--out", path_str(&out)]), 2);
    assert!(!out.exists());
    let m = manifest_of(&out);
    assert_eq!(m.status, "usage_error");
    assert!(m.error.unwrap().contains("s <= l/2"));
    assert!(m.outputs.is_empty());
    assert_eq!(cli(&["estimate", "--n", "5", "--s", "1", "--out", path_str(&out)]), 2);
}

#[test]
fn forced_estimate_reports_a_negative_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("forced.json");
    assert_eq!(cli(&["estimate", "--n", "8", "--s", "3", "--force", "--out", path_str(&out)]), 1);
    let r: EstimateRecord = read_json(&out).unwrap();
    assert!(!r.verdict && r.a_numeric >= r.b);
    assert_eq!(manifest_of(&out).status, "negative");
}

#[test]
fn flags_are_long_form_only() {
    assert_eq!(cli(&["estimate", "-n", "4", "-s", "1"]), 2);
    assert_eq!(cli(&["frobnicate"]), 2);
}

#[test]
fn solve_default_four_body_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("n4.json");
    std::fs::write(&config, r#"{"n": 4, "s": 1}"#).unwrap();
    let out = dir.path().join("orbit.json");
    assert_eq!(cli(&["solve", "--config", path_str(&config), "--out", path_str(&out)]), 0);
    let orbit: OrbitFile = read_json(&out).unwrap();
    assert_eq!((orbit.n_intervals, orbit.nodes.len()), (512, 513));
    let action = orbit.action.unwrap();
    assert!(action < 30.65 && (action - 22.6432546).abs() < 1e-6, "{action}");
    assert_eq!(orbit.classes, vec![vec![0, 1], vec![2, 3]]);
    let m = manifest_of(&out);
    assert_eq!(m.inputs, vec![config]);
    assert_eq!(m.verdicts["converged"], true);
    assert_eq!(m.verdicts["below_b"], true);
    assert_eq!(m.config["resolved"]["N"], 512);

    let report = dir.path().join("check.json");
    assert_eq!(cli(&["verify", path_str(&out), "--out", path_str(&report)]), 0);
    let v: VerificationRecord = read_json(&report).unwrap();
    assert!(v.passed && v.closure_error.unwrap() < 1e-4 && v.el_residual_relative.unwrap() < 1e-3);
}

#[test]
fn solve_with_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let outputs: Vec<PathBuf> = ["a.json", "b.json"].iter().map(|f| dir.path().join(f)).collect();
    for out in &outputs {
        let status = binary()
            .args(["solve", "--n", "6", "--s", "1", "--N", "64", "--seed", "7", "--out", path_str(out)])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&outputs[0]).unwrap(), std::fs::read(&outputs[1]).unwrap());
    let orbit: OrbitFile = read_json(&outputs[0]).unwrap();
    let b = total_collision_lower_bound(&SymmetryParams::new(6, 1, 1.0).unwrap());
    assert!(orbit.action.unwrap() < b);
}

#[test]
fn missing_config_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("absent-config.json");
    let out = dir.path().join("o.json");
    let output = binary().args(["solve", "--config", path_str(&config), "--out", path_str(&out)]).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("absent-config.json"), "{stderr}");
    let m = manifest_of(&out);
    assert_eq!(m.status, "io_error");
    assert!(m.error.unwrap().contains("absent-config.json"));
}

#[test]
fn solve_needs_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    assert_eq!(cli(&["solve", "--n", "4", "--out", path_str(&out)]), 2);
    assert_eq!(cli(&["solve", "--n", "4", "--s", "1", "--N", "16", "--out", path_str(&out)]), 2);
    assert_eq!(cli(&["solve", "--n", "4", "--s", "1", "--scheme", "simpson", "--out", path_str(&out)]), 2);
    assert!(!out.exists());
}

#[test]
fn solve_refines_from_an_orbit_file() {
    let dir = tempfile::tempdir().unwrap();
    let coarse = dir.path().join("coarse.json");
    assert_eq!(cli(&["solve", "--n", "4", "--s", "1", "--N", "64", "--out", path_str(&coarse)]), 0);
    let config = dir.path().join("fine.json");
    std::fs::write(&config, r#"{"n": 4, "s": 1, "N": 128, "initial_guess": {"file": "coarse.json"}}"#).unwrap();
    let fine = dir.path().join("fine-orbit.json");
    assert_eq!(cli(&["solve", "--config", path_str(&config), "--out", path_str(&fine)]), 0);
    let a = read_json::<OrbitFile>(&coarse).unwrap().action.unwrap();
    let b = read_json::<OrbitFile>(&fine).unwrap().action.unwrap();
    assert!((a - b).abs() < 1e-5 * a, "{a} {b}");

    std::fs::write(&config, r#"{"n": 6, "s": 1, "N": 128, "initial_guess": {"file": "coarse.json"}}"#).unwrap();
    assert_eq!(cli(&["solve", "--config", path_str(&config), "--out", path_str(&fine)]), 2);
}

#[test]
fn iteration_cap_is_a_negative_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("capped.json");
    assert_eq!(cli(&["solve", "--n", "4", "--s", "1", "--N", "64", "--max-iters", "3", "--out", path_str(&out)]), 1);
    assert!(out.exists());
    let m = manifest_of(&out);
    assert_eq!(m.verdicts["termination"], "iter_cap");
    assert_eq!(m.verdicts["converged"], false);
}

#[test]
fn verify_applies_thresholds_and_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let orbit = dir.path().join("small.json");
    assert_eq!(cli(&["solve", "--n", "4", "--s", "1", "--N", "64", "--out", path_str(&orbit)]), 0);
    let strict = dir.path().join("strict.json");
    assert_eq!(cli(&["verify", path_str(&orbit), "--closure-tol", "1e-9", "--out", path_str(&strict)]), 1);
    assert!(!read_json::<VerificationRecord>(&strict).unwrap().passed);
    let loose = dir.path().join("loose.json");
    assert_eq!(cli(&["verify", path_str(&orbit), "--closure-tol", "1e-2", "--out", path_str(&loose)]), 0);

    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"n\": 4").unwrap();
    let report = dir.path().join("g.json");
    assert_eq!(cli(&["verify", path_str(&garbage), "--out", path_str(&report)]), 3);
    assert_eq!(manifest_of(&report).status, "io_error");
}

#[test]
fn sweep_reproduces_the_twist_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    let output = binary()
        .env("DIHEDRAL_THREADS", "2")
        .args(["sweep", "--n-min", "4", "--n-max", "26", "--N", "128", "--out", path_str(&out)])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let table: SweepTable = read_json(&out).unwrap();
    let s_max = |n: usize| table.rows.iter().find(|r| r.n == n).unwrap().s_max;
    assert_eq!(s_max(14), 3);
    assert_eq!(s_max(26), 6);
    assert!(table.rows.iter().all(|r| r.verdict));
    let row = table.rows.iter().find(|r| r.n == 14 && r.s == 1).unwrap();
    assert!((row.f_n - 3.3262).abs() < 5e-5);
    let mut keys: Vec<(usize, usize)> = table.rows.iter().map(|r| (r.n, r.s)).collect();
    let sorted = {
        let mut k = keys.clone();
        k.sort();
        k
    };
    assert_eq!(keys, sorted);
    keys.dedup();
    assert_eq!(keys.len(), table.rows.len());
    assert!(String::from_utf8_lossy(&output.stdout).contains("s_max"));
}

#[test]
fn sweep_rejects_bad_ranges_and_thread_caps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    assert_eq!(cli(&["sweep", "--n-min", "5", "--n-max", "9", "--out", path_str(&out)]), 2);
    let status = binary()
        .env("DIHEDRAL_THREADS", "zero")
        .args(["sweep", "--n-min", "4", "--n-max", "4", "--out", path_str(&out)])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
