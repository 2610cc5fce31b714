use std::process::{Command, Output};

use serde_json::Value;

fn pinning(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pinning")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn analyze_reports_pinned_vector() {
    let o = pinning(&["analyze", "0.95,0.85,0.8,0.2,0.15,0.05"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("representable          true"), "{text}");
    assert!(text.contains("facet_distance         0.000000000000"), "{text}");
}

#[test]
fn analyze_json_and_csv() {
    let o = pinning(&["analyze", "0.95,0.9,0.7,0.3,0.1,0.05", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["dimension"], 6);
    assert!((v["bd_inequality"].as_f64().unwrap() + 0.15).abs() < 1e-12);
    assert_eq!(v["representable"], false);

    let o = pinning(&["analyze", "0.95,0.9,0.7,0.3,0.1,0.05", "--format", "csv"]);
    let text = stdout(&o);
    assert!(text.starts_with("quantity,value\n"));
    assert!(text.contains("bd_inequality,-0.150000000000"));
}

#[test]
fn analyze_general_dimension() {
    let o = pinning(&["analyze", "1,1,0.5,0.5", "--particles", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["bd_inequality"], Value::Null);
    assert!((v["hf_distance"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(pinning(&["analyze", "0.5,x"]).status.code(), Some(2));
    assert_eq!(pinning(&["analyze", "0.5,0.6"]).status.code(), Some(2));
    assert_eq!(pinning(&["lithium", "--a", "2.0"]).status.code(), Some(2));
    assert_eq!(pinning(&["lithium", "--m", "0", "--no-exponent-opt"]).status.code(), Some(2));
    assert_eq!(pinning(&["lithium", "--assignment", "C"]).status.code(), Some(2));
    assert_eq!(pinning(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn lithium_iteration_cap_exits_with_three() {
    let o = pinning(&["lithium", "--m", "3", "--no-exponent-opt", "--max-iter", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("converged                          false"));
}

#[test]
fn lithium_json_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("li.json");
    let cache = cache.to_str().unwrap();
    let o = pinning(&["lithium", "--m", "3", "--format", "json", "--cache", cache]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in [
        "schema_version",
        "config",
        "a",
        "b",
        "exponent_optimum",
        "basis_size",
        "energies",
        "mcscf",
        "bounds",
        "converged",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    for key in ["single_determinant", "hartree_fock", "mcscf", "fci"] {
        assert!(v["energies"][key].is_f64(), "missing energies.{key}");
    }
    for key in ["e0", "e_hf", "e_d", "delta_e", "e_corr", "d_value", "s_value", "exact_occupations", "recovery"] {
        assert!(v["bounds"].get(key).is_some(), "missing bounds.{key}");
    }
    for key in ["coefficients", "rotation", "assignment", "occupations", "constraints", "self_consistency"] {
        assert!(v["mcscf"].get(key).is_some(), "missing mcscf.{key}");
    }
    let e = &v["energies"];
    let fci = e["fci"].as_f64().unwrap();
    let mcscf = e["mcscf"].as_f64().unwrap();
    let hf = e["hartree_fock"].as_f64().unwrap();
    assert!(fci <= mcscf && mcscf <= hf);

    // The second run is served from the cache and prints the same report.
    let again = pinning(&["lithium", "--m", "3", "--format", "json", "--cache", cache]);
    assert_eq!(stdout(&again), stdout(&o));
}

#[test]
fn verify_pinning_suite_passes() {
    let o = pinning(&["verify", "pinning"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4);
    assert!(text.ends_with("4 checks, 0 failed\n"));
}
