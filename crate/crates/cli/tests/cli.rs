use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ricci-forge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let out = run(&all);
    let text = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}"));
    (out.status.code().unwrap(), v)
}

fn assert_schema(v: &Value, sub: &str) {
    assert_eq!(v["tool"], "ricci-forge");
    assert_eq!(v["subcommand"], sub);
    assert!(v["version"].is_string() && v["inputs"].is_object());
    for c in v["checks"].as_array().unwrap() {
        for key in ["name", "pass", "value", "tolerance"] {
            assert!(c.get(key).is_some(), "{key} missing in {c}");
        }
    }
}

#[test]
fn oracle_check_sphere() {
    let (code, v) = json(&["oracle-check", "--preset", "sphere:2:1", "--tol", "1e-6"]);
    assert_eq!(code, 0);
    assert_schema(&v, "oracle-check");
    assert_eq!(v["results"]["sectional"].as_f64(), Some(1.0));
}

#[test]
fn warped_verify_torus_has_non_gating_erratum_section() {
    let spec = data("torus1.json");
    let (code, v) = json(&["warped-verify", "--spec", &spec, "--p", "3", "--tol", "1e-5"]);
    assert_eq!(code, 0);
    assert_schema(&v, "warped-verify");
    assert_eq!(v["results"]["knownErratum"]["gating"], false);
}

#[test]
fn warped_verify_affine_reports_erratum_but_passes() {
    let spec = data("affine.json");
    let (code, v) = json(&["warped-verify", "--spec", &spec, "--p", "3"]);
    assert_eq!(code, 0);
    assert!(v["results"]["knownErratum"]["maxDeviation"].as_f64().unwrap() > 1e-5);
}

#[test]
fn tight_tolerance_fails_with_code_2() {
    let spec = data("torus1.json");
    let out = run(&["warped-verify", "--spec", &spec, "--tol", "1e-15"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn minp_reports_pstar() {
    let (code, v) = json(&["minp", "--n", "1", "--c", "0", "--m", "1"]);
    assert_eq!(code, 0);
    assert_schema(&v, "minp");
    assert_eq!(v["results"]["pStar"].as_u64(), Some(25));
    let (_, none) = json(&["minp", "--n", "1", "--c", "0", "--m", "0"]);
    assert!(none["results"]["pStar"].is_null());
}

#[test]
fn plan_vector_bundle_over_ricnneg() {
    let (code, v) = json(&["plan", "--file", &data("plan_vb_ricnneg.json")]);
    assert_eq!(code, 0);
    assert!(v["results"]["pBound"].as_u64().unwrap() >= 2);
    let rules: Vec<&str> = v["results"]["trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["rule"].as_str().unwrap())
        .collect();
    assert!(rules.contains(&"vb-lift") && rules.contains(&"rescale"));
}

#[test]
fn sol_plan_is_a_domain_error() {
    let out = run(&["plan", "--file", &data("plan_sol.json")]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Sol"));
}

#[test]
fn usage_errors_exit_3() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(run(&["oracle-check", "--preset", "torus:9"]).status.code(), Some(3));
    assert_eq!(run(&["warped-eval", "--spec", "/nonexistent.json", "--r", "1"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_expression_is_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"n": 0, "f": "sin(r"}"#).unwrap();
    let out = run(&["warped-eval", "--spec", path.to_str().unwrap(), "--r", "1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sin(r"));
}

#[test]
fn sphere_recovery_via_eval() {
    let (code, v) = json(&["warped-eval", "--spec", &data("sphere.json"), "--p", "4", "--r", "0.3,1.2"]);
    assert_eq!(code, 0);
    for b in v["results"]["blocks"].as_array().unwrap() {
        assert!((b["rr"].as_f64().unwrap() - 3.0).abs() < 1e-12);
        assert!((b["uu"].as_f64().unwrap() - 3.0).abs() < 1e-12);
    }
}

#[test]
fn hopf_variation_and_error_bounds() {
    let (code, _) = json(&["variation-eval", "--preset", "hopf", "--t", "1,0.5,0.25"]);
    assert_eq!(code, 0);
    let (code, v) = json(&["error-bounds", "--data", &data("hopf.json")]);
    assert_eq!(code, 0);
    assert_eq!(v["results"]["derivedC"].as_f64(), Some(2.0));
    let out = run(&["error-bounds", "--preset", "hopf", "--c", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let args = |out: &str| {
        vec![
            "oracle-check".to_string(),
            "--preset".into(),
            "s3-left-invariant:1:2:3".into(),
            "--samples".into(),
            "6".into(),
            "--seed".into(),
            "11".into(),
            "--json".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let first = Command::new(env!("CARGO_BIN_EXE_ricci-forge"))
        .args(args(a.to_str().unwrap()))
        .env("RICCI_FORGE_THREADS", "1")
        .output()
        .unwrap();
    let second = Command::new(env!("CARGO_BIN_EXE_ricci-forge"))
        .args(args(b.to_str().unwrap()))
        .env("RICCI_FORGE_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(&a).unwrap(), first.stdout);
    let plan = data("plan_iterated.json");
    assert_eq!(run(&["plan", "--file", &plan, "--json"]).stdout, run(&["plan", "--file", &plan, "--json"]).stdout);
}

#[test]
fn csv_and_threads_env() {
    let out = run(&["kbound", "--n", "2", "--c", "1", "--m", "1", "--format", "csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "k,pBound\n4.9000000000000000e1,50\n");
    let bad = Command::new(env!("CARGO_BIN_EXE_ricci-forge"))
        .args(["kbound", "--n", "1", "--c", "0", "--m", "1"])
        .env("RICCI_FORGE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(3));
}
