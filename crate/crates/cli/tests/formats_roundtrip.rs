use std::path::PathBuf;

use dihedral_cli::formats::{
    manifest_path, read_json, to_json_string, write_json, EstimateRecord, GuessRecord, Manifest, OrbitFile,
    ParamsRecord, SolveConfigFile, VerificationRecord,
};
use dihedral_core::estimates::exclusion_report;
use dihedral_core::{GeneratingLoop, SymmetryParams, Vec3};
use proptest::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn reparse<T: Serialize + DeserializeOwned>(x: &T) -> T {
    serde_json::from_str(&to_json_string(x).unwrap()).unwrap()
}

fn finite() -> impl Strategy<Value = f64> {
    any::<f64>().prop_filter("finite", |x| x.is_finite())
}

fn maybe() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![Just(None), finite().prop_map(Some)]
}

fn params_record() -> impl Strategy<Value = ParamsRecord> {
    (2usize..40, 1usize..20, 1usize..40, finite()).prop_map(|(l, s, h, period)| ParamsRecord {
        n: 2 * l,
        l,
        s,
        h,
        period,
    })
}

proptest! {
    #[test]
    fn orbit_files_roundtrip(
        nodes in prop::collection::vec(prop::array::uniform4(finite()), 0..20),
        action in maybe(),
        dmin in maybe(),
        p in params_record(),
        classes in prop::collection::vec(prop::collection::vec(0usize..100, 1..5), 0..4),
    ) {
        let orbit = OrbitFile {
            n: p.n, l: p.l, s: p.s, h: p.h, period: p.period,
            n_intervals: nodes.len().saturating_sub(1), nodes, action, min_pair_distance: dmin, classes,
        };
        prop_assert_eq!(reparse(&orbit), orbit);
    }

    #[test]
    fn estimate_records_roundtrip(p in params_record(), v in prop::array::uniform6(finite()), verdict: bool, grid in 1usize..4096) {
        let r = EstimateRecord {
            params: p, n_intervals: grid, test_loop: "spherical".into(),
            b: v[0], a_bound: v[1], a_numeric: v[2], ratio_bound: v[3], ratio: v[4], margin: v[5], verdict,
        };
        prop_assert_eq!(reparse(&r), r);
    }

    #[test]
    fn verification_records_roundtrip(p in params_record(), v in prop::collection::vec(maybe(), 9), t in finite(), steps: usize, passed: bool) {
        let r = VerificationRecord {
            params: p, n_intervals: 64,
            el_residual: v[0], el_residual_relative: v[1], el_at_joins: [v[2], v[3]], closure_error: v[4],
            energy_drift: v[5], angular_momentum_drift: v[6], min_pair_distance: v[7], symmetry_drift: v[8],
            integration: "completed".into(), t_reached: t, steps, closure_tol: 1e-4, el_tol: 1e-3, passed,
        };
        prop_assert_eq!(reparse(&r), r);
    }

    #[test]
    fn solve_configs_roundtrip(n in 2usize..20, s in 1usize..5, t in finite(), grid in 64usize..2048, seed: Option<u64>, tol in maybe(), file: bool) {
        let mut c = SolveConfigFile::defaults(2 * n, s);
        c.period = t;
        c.n_intervals = grid;
        c.seed = seed;
        c.grad_tol = tol;
        c.initial_guess = Some(if file { GuessRecord::File(PathBuf::from("init.json")) } else { GuessRecord::TestLoop });
        prop_assert_eq!(reparse(&c), c);
    }

    #[test]
    fn manifests_roundtrip(wall in finite(), x in finite(), code in 0i32..4, err in prop::option::of("[a-z ]{0,20}")) {
        let mut verdicts = serde_json::Map::new();
        verdicts.insert("value".into(), serde_json::json!(x));
        verdicts.insert("flag".into(), serde_json::json!(code == 0));
        let m = Manifest {
            command: "solve".into(), version: "0.1.0".into(), config: serde_json::json!({"n": 4, "T": x}),
            inputs: vec![PathBuf::from("in.json")], outputs: vec![], wall_time_s: wall, status: "ok".into(),
            exit_code: code, verdicts, error: err,
        };
        prop_assert_eq!(reparse(&m), m);
    }
}

#[test]
fn floats_use_seventeen_significant_digits() {
    let text = to_json_string(&vec![0.1f64, 1.0 / 3.0, 1e300, -2.5e-310]).unwrap();
    for token in text.split(|c: char| c.is_whitespace() || c == ',' || c == '[' || c == ']').filter(|t| !t.is_empty()) {
        let mantissa = token.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{token}");
    }
}

#[test]
fn non_finite_values_become_null() {
    let lp = GeneratingLoop::from_fn(SymmetryParams::new(4, 1, 1.0).unwrap(), 64, |t| {
        let a = t * std::f64::consts::PI;
        Vec3::new(a.cos(), a.sin(), 0.3 * (8.0 * t - 1.0))
    })
    .unwrap();
    let orbit = OrbitFile::from_loop(&lp, Some(f64::NAN), Some(f64::INFINITY));
    assert_eq!(orbit.action, None);
    assert_eq!(orbit.min_pair_distance, None);
    assert!(to_json_string(&orbit).unwrap().contains("\"action\": null"));
}

#[test]
fn loops_survive_a_file_roundtrip_bit_for_bit() {
    let params = SymmetryParams::new(8, 2, 1.7).unwrap();
    let report = exclusion_report(&params, 128).unwrap();
    let lp = dihedral_core::estimates::default_test_loop(&params, 128).unwrap().generating;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub/loop.json");
    write_json(&path, &OrbitFile::from_loop(&lp, Some(report.a_numeric), None)).unwrap();
    let back: OrbitFile = read_json(&path).unwrap();
    assert_eq!(back.to_loop().unwrap(), lp);
    assert_eq!(back.action, Some(report.a_numeric));
    assert_eq!(back.classes.iter().map(Vec::len).sum::<usize>(), 8);

    let rec = EstimateRecord::from(&report);
    write_json(&dir.path().join("r.json"), &rec).unwrap();
    assert_eq!(read_json::<EstimateRecord>(&dir.path().join("r.json")).unwrap(), rec);
}

#[test]
fn inconsistent_orbit_headers_are_rejected() {
    let lp =
        dihedral_core::estimates::default_test_loop(&SymmetryParams::new(4, 1, 1.0).unwrap(), 64).unwrap().generating;
    let good = OrbitFile::from_loop(&lp, None, None);
    let mut bad = good.clone();
    bad.h = 3;
    assert!(bad.to_loop().is_err());
    let mut bad = good.clone();
    bad.nodes.pop();
    assert!(bad.to_loop().is_err());
    let mut bad = good;
    bad.nodes[0][2] = 0.5;
    assert!(bad.to_loop().is_err());
}

#[test]
fn manifest_sits_next_to_its_output() {
    assert_eq!(manifest_path(&PathBuf::from("out/orbit.json")), PathBuf::from("out/orbit.manifest.json"));
    assert_eq!(manifest_path(&PathBuf::from("plain")), PathBuf::from("plain.manifest.json"));
}

#[test]
fn unknown_config_fields_are_refused() {
    assert!(serde_json::from_str::<SolveConfigFile>(r#"{"n": 4, "s": 1, "tolerance": 1}"#).is_err());
    let c: SolveConfigFile = serde_json::from_str(r#"{"n": 6, "s": 1}"#).unwrap();
    assert_eq!(c, SolveConfigFile::defaults(6, 1));
}
