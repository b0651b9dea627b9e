use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn aip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aip")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.push("--json");
    let o = aip(&full);
    let v: Value = serde_json::from_slice(&o.stdout).expect("JSON report on stdout");
    (o.status.code().unwrap(), v)
}

fn path(name: &str) -> String {
    data(name).display().to_string()
}

#[test]
fn validate_one_dim_instance() {
    let (code, r) = report(&["validate", &path("one_dim.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["validation"]["kappa"], 0);
    assert_eq!(r["status"], "ok");
}

#[test]
fn validation_failures_exit_with_one() {
    let (code, r) = report(&["validate", &path("non_hermitian.json")]);
    assert_eq!(code, 1);
    let codes: Vec<&str> = r["diagnostics"].as_array().unwrap().iter().filter(|d| d["severity"] == "error").map(|d| d["code"].as_str().unwrap()).collect();
    assert!(codes.contains(&"A1"), "{codes:?}");
    let (code, r) = report(&["validate", &path("zero_pencil.json")]);
    assert_eq!(code, 1);
    assert!(r["diagnostics"].as_array().unwrap().iter().any(|d| d["code"] == "A3" && d["severity"] == "error"));
}

#[test]
fn parse_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"n\": 1, \"p\": 1,").unwrap();
    let (code, r) = report(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(r["diagnostics"][0]["message"].as_str().unwrap().contains("line"));
    assert_eq!(aip(&["validate", "missing-file.json"]).status.code(), Some(3));
    assert_eq!(aip(&["no-such-command"]).status.code(), Some(3));
    assert_eq!(aip(&["resolvent", &path("one_dim.json"), "--points", "1+"]).status.code(), Some(3));
}

#[test]
fn resolvent_at_zero_matches_closed_form() {
    let (code, r) = report(&["resolvent", &path("one_dim.json"), "--points", "0"]);
    assert_eq!(code, 0);
    let w = &r["result"]["samples"][0]["W"];
    let s2 = 2f64.sqrt();
    let expected = [[-1.0, s2], [-s2, 2.0]];
    for i in 0..2 {
        for j in 0..2 {
            let re = w[i][j][0].as_f64().unwrap();
            let im = w[i][j][1].as_f64().unwrap();
            assert!((re - expected[i][j]).abs() < 1e-12 && im.abs() < 1e-12, "W[{i}][{j}] = {re}+{im}i");
        }
    }
}

#[test]
fn solve_reproduces_pick_values() {
    let (code, r) = report(&["solve", &path("pick.json")]);
    assert_eq!(code, 0);
    assert!(r["result"]["interpolation"]["max"].as_f64().unwrap() <= 1e-8);
    assert_eq!(r["result"]["verification"]["kappa_hat"]["kappa"], 0);
    let (code, r) = report(&["solve", &path("pick_indefinite.json"), "--epsilon", "-0.4i"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["verification"]["kappa_hat"]["kappa"], 1);
}

#[test]
fn solve_rejects_non_schur_parameter() {
    let (code, r) = report(&["solve", &path("pick.json"), "--epsilon", "1.5"]);
    assert_eq!(code, 1);
    assert!(r["diagnostics"].as_array().unwrap().iter().any(|d| d["code"] == "EPSILON"));
}

#[test]
fn verify_accepts_solution_and_rejects_perturbation() {
    let (_, r) = report(&["solve", &path("pick.json"), "--epsilon", "0.2+0.1i"]);
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, serde_json::to_string(&r["result"]["solution"]).unwrap()).unwrap();
    let (code, _) = report(&["verify", &path("pick.json"), "--solution", good.to_str().unwrap()]);
    assert_eq!(code, 0);
    let mut sol = r["result"]["solution"].clone();
    let h = sol["H"][0][0][0].as_f64().unwrap();
    sol["H"][0][0][0] = Value::from(h + 0.01);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&sol).unwrap()).unwrap();
    let (code, r) = report(&["verify", &path("pick.json"), "--solution", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(r["diagnostics"].as_array().unwrap().iter().any(|d| d["code"] == "INTERPOLATION" || d["code"] == "SOLUTION_REJECTED"));
}

#[test]
fn signature_and_factorization_of_reciprocal() {
    let (code, r) = report(&["signature", &path("reciprocal.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["negative_squares"]["kappa"], 1);
    let (code, r) = report(&["factorize", &path("reciprocal.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["left"]["degree"], 1);
    assert_eq!(r["result"]["right"]["rank_full"], true);
    let (code, r) = report(&["signature", &path("pick_indefinite.json")]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["potapov"]["kappa_hat"]["kappa"], 1);
}

#[test]
fn exit_status_tracks_error_diagnostics() {
    for args in [
        vec!["validate".to_string(), path("pick.json")],
        vec!["validate".to_string(), path("zero_pencil.json")],
        vec!["solve".to_string(), path("pick.json"), "--epsilon".into(), "2".into()],
        vec!["factorize".to_string(), path("reciprocal.json")],
    ] {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let (code, r) = report(&refs);
        let errors = r["diagnostics"].as_array().unwrap().iter().filter(|d| d["severity"] == "error").count();
        assert_eq!(code == 0, errors == 0, "{args:?}");
        assert_eq!(r["exit_code"], code);
    }
}

#[test]
fn report_records_input_hash_and_text_mode_prints_status() {
    let (_, r) = report(&["validate", &path("one_dim.json"), "--seed", "3"]);
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(r["settings"]["seed"], 3);
    let o = aip(&["validate", &path("one_dim.json")]);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("validate: ok (exit 0)"));
}
