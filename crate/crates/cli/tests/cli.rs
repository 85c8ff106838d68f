use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn fixture(id: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../fixtures/{id}.json"))
}

fn riemext(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riemext"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_fixture(id: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(fixture(id)).unwrap()).unwrap()
}

/// Writes `value` into a fresh directory and returns both.
fn scenario_file(value: &Value) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    (dir, path)
}

fn f1_core_checks() -> Value {
    let mut v = read_fixture("F1");
    let keep = ["bach-zero", "soliton", "cotton-zero", "geodesic-complete"];
    let name = |c: &Value| {
        c.as_str()
            .or_else(|| c["name"].as_str())
            .unwrap()
            .to_string()
    };
    let checks: Vec<Value> = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| keep.contains(&name(c).as_str()))
        .cloned()
        .collect();
    assert_eq!(checks.len(), 4);
    v["checks"] = Value::Array(checks);
    v.as_object_mut().unwrap().remove("expected");
    v
}

#[test]
fn passing_scenario_exits_zero() {
    let (_dir, path) = scenario_file(&f1_core_checks());
    let o = riemext(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stderr(&o)
            .lines()
            .filter(|l| l.starts_with("PASS "))
            .count(),
        4
    );
}

#[test]
fn failing_check_exits_one() {
    let o = riemext(&["check", fixture("F4").to_str().unwrap(), "--quiet"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stderr.is_empty());
}

#[test]
fn truncated_json_exits_two_with_location() {
    let text = fs::read_to_string(fixture("F1")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.json");
    fs::write(&path, &text[..text.len() / 3]).unwrap();
    let o = riemext(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line ") && err.contains("column "), "{err}");
}

#[test]
fn misspelled_check_exits_two_with_suggestions() {
    let mut v = f1_core_checks();
    v["checks"][0] = json!("bachh-zero");
    let (_dir, path) = scenario_file(&v);
    let o = riemext(&["check", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("did you mean bach-zero"), "{err}");
    assert!(
        err.contains("registered checks") && err.contains("conformally-einstein-case-ii"),
        "{err}"
    );
}

#[test]
fn missing_file_exits_two() {
    let o = riemext(&["check", "/nonexistent/scenario.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let mut v = f1_core_checks();
    v["output"] = json!({ "path": "out/report", "formats": ["json", "csv"] });
    let (dir, path) = scenario_file(&v);
    let run = || {
        let o = riemext(&["check", path.to_str().unwrap(), "--json", "--quiet"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let json = fs::read(dir.path().join("out/report.json")).unwrap();
        let csv = fs::read(dir.path().join("out/report.csv")).unwrap();
        (o.stdout, json, csv)
    };
    let first = run();
    assert_eq!(first, run());
    assert_eq!(first.0, first.1);
    let report: Value = serde_json::from_slice(&first.1).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 4);
    assert_eq!(report["passed"], json!(true));
}

#[test]
fn flags_override_the_file() {
    let o = riemext(&[
        "check",
        fixture("F0").to_str().unwrap(),
        "--json",
        "--quiet",
        "--seed",
        "9",
        "--samples",
        "3",
        "--tol",
        "1e-6",
    ]);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["seed"], json!(9));
    assert_eq!(report["samples"], json!(3));
    assert_eq!(report["atol"].as_f64(), Some(1e-6));
}

#[test]
fn build_soliton_writes_a_completed_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("done.json");
    let o = riemext(&[
        "build-soliton",
        fixture("F3").to_str().unwrap(),
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let done: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let phi = done["phi"].as_array().expect("phi is a matrix");
    assert_eq!(phi[0], json!(["0", "0"]));
    assert_eq!(phi[0][1], phi[1][0]);
    // The completed file still passes its own expectations.
    let o = riemext(&["check", out.to_str().unwrap(), "--json", "--quiet"]);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let verdict = |key: &str| {
        report["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == key)
            .unwrap()["verdict"]
            .clone()
    };
    assert_eq!(verdict("bach-zero"), json!("pass"));
    assert_eq!(verdict("soliton"), json!("pass"));
}

#[test]
fn geodesics_exports_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("f1.csv");
    let o = riemext(&[
        "geodesics",
        fixture("F1").to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,x1,x2,xp1,xp2,v1,v2,v3,v4,E\n"));
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last[0], 2.0);
    assert!((last[4] - (2.0 * 2.0f64.sqrt()).cosh()).abs() < 1e-6);
}

#[test]
fn geodesics_without_initial_data_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let o = riemext(&[
        "geodesics",
        fixture("F0").to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("geodesic"));
}

#[test]
fn report_dumps_curvature_at_listed_points() {
    let mut v = read_fixture("F2");
    v["points"] = json!([[0.0, 0.5, 1.0, -1.0]]);
    let (_dir, path) = scenario_file(&v);
    let o = riemext(&["report", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dump: Value = serde_json::from_slice(&o.stdout).unwrap();
    let p = &dump["points"][0];
    assert_eq!(p["point"], json!([0.0, 0.5, 1.0, -1.0]));
    assert_eq!(p["ricci"]["data"].as_array().unwrap().len(), 16);
    assert!(p["w_plus"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r.as_array().unwrap())
        .all(|x| x.as_f64().unwrap().abs() < 1e-9));
}
