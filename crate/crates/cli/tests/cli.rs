use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sinefactor"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn factor_recovers_squared_sine() {
    let out = run(&["factor", "sin(pi*z)^2", "--cutoff", "20"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc = json(&out);
    assert_eq!(doc["result"]["outcome"], "SineProduct");
    let factors = doc["result"]["form"]["factors"].as_array().unwrap();
    assert_eq!(factors.len(), 1);
    let f = &factors[0];
    assert!((f["alpha"].as_f64().unwrap() - PI).abs() < 1e-9);
    assert!(f["beta"].as_f64().unwrap().abs() < 1e-8);
    assert_eq!(f["multiplicity"], 2);
}

#[test]
fn roots_of_sine_on_window() {
    let out = run(&[
        "roots",
        "sin(pi*z)",
        "--window",
        "-5.5",
        "5.5",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["result"]["count"], 11);
    assert_eq!(doc["result"]["certified"], true);

    let csv = run(&["roots", "sin(pi*z)", "--window", "-5.5", "5.5"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn secular_example_is_superlinear() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("secular.json");
    let gen = run(&[
        "generate",
        "--n",
        "3",
        "--seed",
        "7",
        "--out",
        spec.to_str().unwrap(),
    ]);
    assert_eq!(gen.status.code(), Some(0));
    let out = run(&[
        "meyer",
        "--secular",
        spec.to_str().unwrap(),
        "--cutoff",
        "20",
    ]);
    assert_eq!(
        out.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["result"]["verdict"], "Superlinear");
}

#[test]
fn bad_input_reports_json_error() {
    let out = run(&["parse", "sin(pi*z"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].is_string());
    assert!(err["message"].is_string());
    assert!(out.stdout.is_empty());
}

#[test]
fn output_is_deterministic() {
    let args = [
        "report",
        "sin(pi*z)*sin(sqrt2*pi*z + 0.5)",
        "--basis",
        "sqrt2=1.41421356237309504880",
        "--window",
        "-10",
        "10",
        "--cutoff",
        "20",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    assert_eq!(a.stdout, b.stdout);
}
