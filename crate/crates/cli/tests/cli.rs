use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use besselpot_cli::{CliError, MeasureSpec, ProblemSpec};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_besselpot"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("besselpot-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn spec_errors(text: &str) -> Vec<String> {
    match ProblemSpec::parse(text) {
        Err(CliError::Spec(e)) => e,
        other => panic!("expected a spec error, got {other:?}"),
    }
}

#[test]
fn minimal_spec_gets_defaults() {
    let s = ProblemSpec::parse(r#"{"alphas": [0.25]}"#).unwrap();
    assert_eq!((s.grid.x_max, s.grid.m, s.cubes.depth), (12.0, 256, 6));
    assert_eq!((s.nu, s.p), (2.0, 2.0));
    assert_eq!(s.n(), 1);
}

#[test]
fn spec_constraints_are_reported_by_field() {
    let e = spec_errors(r#"{"alphas": [-0.6]}"#);
    assert!(e.iter().any(|m| m.starts_with("alphas[0]") && m.contains("α > -1/2")), "{e:?}");
    let e = spec_errors(r#"{"alphas": [0.5], "p": 1}"#);
    assert!(e.iter().any(|m| m.starts_with("p:") && m.contains("p > 1")), "{e:?}");
    let e = spec_errors(r#"{"alphas": [0.5], "nu": 0}"#);
    assert!(e.iter().any(|m| m.starts_with("nu:")), "{e:?}");
    let e = spec_errors(r#"{"alphas": [0.5, 0.5], "measure": {"kind": "indicator", "value": -1, "lo": [0], "hi": [1, 1]}}"#);
    assert!(e.iter().any(|m| m == "measure.value: must be non-negative, got -1"), "{e:?}");
    assert!(e.iter().any(|m| m.starts_with("measure.lo")), "{e:?}");
    let e = spec_errors(r#"{"alphas": [0.5], "grid": {"m": 1, "x_max": -1}}"#);
    assert_eq!(e.len(), 2, "{e:?}");
}

#[test]
fn unknown_fields_and_kinds_are_errors() {
    assert!(!spec_errors(r#"{"alphas": [0.5], "extra": 1}"#).is_empty());
    assert!(!spec_errors(r#"{"alphas": [0.5], "grid": {"cells": 3}}"#).is_empty());
    assert!(!spec_errors(r#"{"alphas": [0.5], "measure": {"kind": "cauchy"}}"#).is_empty());
    assert!(!spec_errors(r#"{"alphas": [0.5], "measure": {"kind": "constant", "value": 1, "rate": 2}}"#).is_empty());
    assert!(MeasureSpec::parse(r#"{"kind": "lebesgue"}"#).is_ok());
}

#[test]
fn digest_tracks_content() {
    let a = ProblemSpec::parse(r#"{"alphas": [0.5]}"#).unwrap();
    let b = ProblemSpec::parse(r#"{ "alphas": [0.5], "grid": {"m": 256} }"#).unwrap();
    let c = ProblemSpec::parse(r#"{"alphas": [0.5], "nu": 1}"#).unwrap();
    assert_eq!(a.digest(), b.digest());
    assert_ne!(a.digest(), c.digest());
    assert_eq!(a.digest().len(), 64);
}

#[test]
fn kernel_defaults_are_monotone() {
    let out = run(&["kernel", "--alphas", "0.25"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,G,negGprime"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 256);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
    assert!(rows.iter().all(|r| r[2] > 0.0));
}

#[test]
fn eigen_on_a_constant_potential() {
    let dir = scratch("eigen");
    let v = write(&dir, "v.json", r#"{"kind": "constant", "value": 4}"#);
    let args = ["eigen", "--alphas", "0.5", "--depth", "3", "--potential", v.to_str().unwrap()];
    let out = run(&args);
    let j = stdout_json(&out);
    assert!((j["lambda1"].as_f64().unwrap() + 4.0).abs() < 1e-8, "{}", j["lambda1"]);
    assert!(j["L"].is_null());
    assert_eq!(j["version"], besselpot::VERSION);
    assert_eq!(j["spec_digest"].as_str().unwrap().len(), 64);
    assert!(!j["cubes"].as_array().unwrap().is_empty());
    assert_eq!(run(&args).stdout, out.stdout, "outputs are deterministic");
}

#[test]
fn calibrate_then_bracket() {
    let dir = scratch("calib");
    let w1 = write(&dir, "w1.json", r#"{"kind": "indicator", "value": 4, "lo": [0], "hi": [1]}"#);
    let w2 = write(&dir, "w2.json", r#"{"kind": "indicator", "value": 3, "lo": [0], "hi": [2]}"#);
    let out = dir.join("out");
    let st = bin()
        .args(["calibrate", "--alphas", "0.5", "--depth", "4", "--train"])
        .args([&w1, &w2])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let calib: Value = serde_json::from_str(&std::fs::read_to_string(out.join("calib.json")).unwrap()).unwrap();
    let (a, b) = (calib["A"].as_f64().unwrap(), calib["B"].as_f64().unwrap());
    assert!(a > 0.0 && a <= b);
    assert_eq!(calib["training_report"].as_array().unwrap().len(), 2);
    for w in [&w1, &w2] {
        let res = bin()
            .args(["eigen", "--alphas", "0.5", "--depth", "4", "--potential"])
            .arg(w)
            .arg("--thresholds")
            .arg(out.join("calib.json"))
            .output()
            .unwrap();
        let j = stdout_json(&res);
        assert_eq!(j["B"].as_f64().unwrap(), b, "thresholds round-trip exactly");
        assert_eq!(j["brackets"], Value::Bool(true), "{j}");
    }
    // thresholds calibrated on another family are refused
    let res = bin()
        .args(["eigen", "--alphas", "0.5", "--depth", "5", "--potential"])
        .arg(&w1)
        .arg("--thresholds")
        .arg(out.join("calib.json"))
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn trace_check_on_lebesgue() {
    let dir = scratch("trace");
    let leb = write(&dir, "leb.json", r#"{"kind": "lebesgue"}"#);
    let out = dir.join("out");
    let st = bin()
        .args(["trace-check", "--alphas", "0.5", "--depth", "3", "--m", "96", "--measure"])
        .arg(&leb)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let j: Value = serde_json::from_str(&std::fs::read_to_string(out.join("trace_check.json")).unwrap()).unwrap();
    assert!((j["A3_hat"].as_f64().unwrap() - 1.0).abs() < 1e-6, "{}", j["A3_hat"]);
    let csv = std::fs::read_to_string(out.join("trace_cubes.csv")).unwrap();
    assert!(csv.starts_with("center,half_side,value\n"));
    assert_eq!(csv.lines().count() - 1, j["per_cube"].as_array().unwrap().len());
}

#[test]
fn translate_square_closed_form() {
    let out = run(&["translate", "--alphas", "0.5", "--f", "square", "--t", "1", "--x-grid", "1:1:1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let v: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - 2.0).abs() < 1e-8, "{v}");
}

#[test]
fn convolve_tent_with_lebesgue() {
    // ∫_0^1 (1-r) r² dr = 1/12 at every point
    let dir = scratch("conv");
    let leb = write(&dir, "leb.json", r#"{"kind": "lebesgue"}"#);
    let out = bin()
        .args(["convolve", "--alphas", "0.5", "--kernel", "tent", "--x-grid", "0.5:3:6", "--measure"])
        .arg(&leb)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x,value"));
    for l in text.lines().skip(1) {
        let v: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 1.0 / 12.0).abs() < 1e-8, "{l}");
    }
    let bad = bin().args(["convolve", "--alphas", "0.5", "--kernel", "wavelet"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn hankel_of_gaussian() {
    let out = run(&["hankel", "--alphas", "0.5", "--f", "gaussian", "--x-max", "8", "--m", "256", "--xi-max", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("xi,fhat"));
    // Γ(3/2)/2 · e^{-ξ²/4}
    let c = std::f64::consts::PI.sqrt() / 4.0;
    for l in text.lines().skip(1).step_by(32) {
        let r: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((r[1] - c * (-r[0] * r[0] / 4.0).exp()).abs() < 1e-4, "{l}");
    }
}

#[test]
fn measure_check_is_seeded() {
    let dir = scratch("measure");
    let m = write(&dir, "m.json", r#"{"kind": "indicator", "value": 1, "lo": [0], "hi": [2]}"#);
    let go = |seed: &str| {
        let o = bin()
            .args(["measure-check", "--alphas", "0.5", "--seed", seed, "--out"])
            .arg(dir.join(seed))
            .arg("--measure")
            .arg(&m)
            .output()
            .unwrap();
        assert!(o.status.success());
        std::fs::read_to_string(dir.join(seed).join("measure_check.json")).unwrap()
    };
    let (a, b, c) = (go("1"), go("1"), go("2"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let j: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(j["inequalities"]["gap_violations"], 0);
    assert_eq!(j["inequalities"]["sharp_comparison"]["violations"], 0);
    assert!((j["doubling"]["ratio"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["kernel", "--alphas", "-0.6"]).status.code(), Some(2));
    assert_eq!(run(&["kernel"]).status.code(), Some(2));
    assert_eq!(run(&["eigen", "--alphas", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["kernel", "--spec", "/nonexistent/spec.json"]).status.code(), Some(2));
    let dir = scratch("exit");
    let spec = write(&dir, "s.json", r#"{"alphas": [0.5], "tol": 1e-300, "grid": {"m": 64}, "cubes": {"depth": 1}}"#);
    let v = write(&dir, "v.json", r#"{"kind": "indicator", "value": 4, "lo": [0], "hi": [1]}"#);
    let out = bin().arg("eigen").arg("--spec").arg(&spec).arg("--potential").arg(&v).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn thread_count_from_environment() {
    let a = bin().args(["kernel", "--alphas", "0.5", "--eval", "1"]).env("BESSELPOT_THREADS", "1").output().unwrap();
    let b = bin().args(["kernel", "--alphas", "0.5", "--eval", "1", "--threads", "2"]).output().unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}
