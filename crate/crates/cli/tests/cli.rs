use std::f64::consts::PI;
use std::process::{Command, Output};

use sta_cli::table::parse_csv;
use sta_core::verifier::ScanResult;

const BIN: &str = env!("CARGO_BIN_EXE_sta-harmonic");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn table(args: &[&str]) -> ScanResult {
    parse_csv(&stdout_of(args)).unwrap().result
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout_of(args)).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn raw_units_are_e0_times_half_omega0() {
    let half_omega0 = PI * 250.0;
    for args in [
        vec!["design", "--traj", "hybrid", "--tau", "0.2"],
        vec!["scan", "--axis", "tf", "--points-per-decade", "5"],
        vec!["scan", "--axis", "tau"],
    ] {
        let e0 = table(&args);
        let mut raw_args = args.clone();
        raw_args.extend(["--units", "raw"]);
        let raw = table(&raw_args);
        assert_eq!(e0.columns, raw.columns);
        let energy_cols: Vec<usize> = e0
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| !matches!(c.as_str(), "s" | "b" | "bdot" | "bddot" | "omega_sq"))
            .map(|(i, _)| i)
            .collect();
        for (a, b) in e0.rows.iter().zip(&raw.rows) {
            assert_eq!(a.coords, b.coords);
            for &i in &energy_cols {
                assert!(
                    close(b.values[i], a.values[i] * half_omega0, 1e-12),
                    "{args:?} column {i}"
                );
            }
        }
    }

    let e0 = json(&["analyze", "--format", "json"]);
    let raw = json(&["analyze", "--format", "json", "--units", "raw"]);
    for key in [
        "avg_energy",
        "max_energy",
        "bound",
        "bound_asymptotic",
        "avg_std",
        "aa_lower_bound",
    ] {
        let (a, b) = (e0[key].as_f64().unwrap(), raw[key].as_f64().unwrap());
        assert!(close(b, a * half_omega0, 1e-12), "{key}");
    }
    assert_eq!(e0["fs_distance"], raw["fs_distance"]);
}

#[test]
fn angular_flag_matches_hz_input() {
    let hz = stdout_of(&["analyze", "--format", "json"]);
    let rad = stdout_of(&[
        "analyze",
        "--format",
        "json",
        "--angular",
        "--f0-hz",
        &(2.0 * PI * 250.0).to_string(),
        "--ff-hz",
        &(2.0 * PI * 0.25).to_string(),
    ]);
    let (a, b): (serde_json::Value, serde_json::Value) =
        (serde_json::from_str(&hz).unwrap(), serde_json::from_str(&rad).unwrap());
    assert_eq!(a["avg_energy"], b["avg_energy"]);
    assert_eq!(a["config"]["run"]["omega0"], b["config"]["run"]["omega0"]);
}

#[test]
fn design_table_meets_boundary_conditions() {
    let t = table(&["design", "--samples", "201"]);
    assert_eq!(t.axes, ["t_s"]);
    assert_eq!(t.rows.len(), 201);
    let b = t.column("b").unwrap();
    let bdot = t.column("bdot").unwrap();
    let std = t.column("std").unwrap();
    assert_eq!(b[0], 1.0);
    assert!(close(*b.last().unwrap(), 1000f64.sqrt(), 1e-12));
    assert!(bdot[0].abs() < 1e-12 && bdot.last().unwrap().abs() < 1e-9);
    assert!(std[0] < 1e-9 && *std.last().unwrap() < 1e-9);
}

#[test]
fn equal_frequencies_give_a_flat_design() {
    let t = table(&["design", "--ff-hz", "250", "--samples", "101"]);
    for v in t.column("b").unwrap() {
        assert!((v - 1.0).abs() < 1e-14);
    }
    for v in t.column("energy").unwrap() {
        assert!((v - 1.0).abs() < 1e-12);
    }
}

#[test]
fn analyze_reports_dominance_and_roundtrip() {
    for traj in [vec!["--traj", "poly"], vec!["--traj", "hybrid", "--tau", "0.05"]] {
        let mut args = vec!["analyze", "--format", "json"];
        args.extend(&traj);
        let v = json(&args);
        assert!(v["avg_energy"].as_f64().unwrap() >= v["bound"].as_f64().unwrap());
        assert_eq!(v["roundtrip_passed"], true);
    }
    let csv = table(&["analyze"]);
    assert!(csv.axes.is_empty());
    assert_eq!(csv.rows.len(), 1);
}

#[test]
fn verify_emits_json_and_exit_zero_on_success() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["all_passed"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("PASS"));

    let qopt = run(&["verify", "--traj", "qopt"]);
    assert_eq!(qopt.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&qopt.stderr).contains("EXPECTED-FAIL"));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["design", "--traj", "hybrid"],
        vec!["design", "--traj", "hybrid", "--tau", "0.7"],
        vec!["design", "--tau", "0.1"],
        vec!["design", "--tf-s", "-1"],
        vec!["design", "--samples", "10"],
        vec!["scan", "--axis", "tf", "--from", "1", "--to", "0.1"],
        vec!["scan", "--axis", "tau", "--taus", "0.1,0.6"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn compressions_design_but_bang_bang_needs_an_expansion() {
    let t = table(&["design", "--ff-hz", "1000", "--samples", "101"]);
    assert!(close(*t.column("b").unwrap().last().unwrap(), 0.5, 1e-12));
    let out = run(&["otto", "--law", "bang-bang", "--from", "300", "--to", "3000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let args = ["otto", "--law", "quarter"];
    let expected = stdout_of(&args);
    let out = run(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), expected);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn otto_fit_is_reported() {
    let t = table(&["otto", "--law", "budget", "--points-per-decade", "10"]);
    let fit = t.fits.get("rate").unwrap();
    assert!((fit.exponent - 1.5).abs() < 1e-6, "{}", fit.exponent);
}

#[test]
fn grid_scan_is_tf_major() {
    let t = table(&["scan", "--axis", "grid", "--grid-points", "4"]);
    assert_eq!(t.axes, ["tf_s", "omegaf_rad_s"]);
    assert_eq!(t.rows.len(), 16);
    assert_eq!(t.rows[0].coords[0], t.rows[3].coords[0]);
    assert!(t.rows[4].coords[0] > t.rows[3].coords[0]);
}
