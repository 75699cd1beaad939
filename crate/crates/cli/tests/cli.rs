use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use orbirig::properiso::{ClassificationReport, Verdict};
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbirig"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_reports_invariants() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", r#"{"facets": [[1,0],[1,4],[-1,-2]]}"#);
    let out = run(&["analyze", s(&p)]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["n"], 1);
    assert_eq!(v["g"], 2);
    assert_eq!(v["r"], 1);
    assert_eq!(v["vertex_dets"], serde_json::json!([2, 4, 2]));
    assert_eq!(v["special_vertex"], 2);

    let q = write(&dir, "q.json", r#"{"facets": [[1,0],[0,1],[-1,-1]]}"#);
    let v = json(&run(&["analyze", s(&q)]));
    assert_eq!(v["g"], 1);
    assert!(v["special_vertex"].is_null());
}

#[test]
fn analyze_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"facets\": [[1,0]");
    assert_eq!(code(&run(&["analyze", s(&bad)])), 2);
    let invalid = write(&dir, "inv.json", r#"{"facets": [[2,4],[0,1],[1,1]]}"#);
    let out = run(&["analyze", s(&invalid)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not_primitive"));
    assert_eq!(code(&run(&["analyze", "/nonexistent/file.json"])), 2);
}

fn model(dir: &TempDir, name: &str, g: u64, c: i64) -> PathBuf {
    write(dir, name, &format!(r#"{{"n":1,"g":{g},"A":[[0]],"b":[0],"c":{c}}}"#))
}

#[test]
fn decide_verdicts() {
    let dir = TempDir::new().unwrap();
    let c1 = model(&dir, "c1.json", 2, 1);
    let c3 = model(&dir, "c3.json", 2, 3);
    let out = run(&["decide", s(&c1), s(&c1)]);
    assert_eq!(code(&out), 0);
    let v: Verdict = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.homotopy_equivalent);

    // reversing the top cell identifies c = 1 with c = 3
    let v: Verdict = serde_json::from_slice(&run(&["decide", s(&c1), s(&c3)]).stdout).unwrap();
    assert!(v.properly_isomorphic);
    assert!(v.homotopy_equivalent);
    assert_eq!(v.witness.unwrap().eps, -1);

    let o0 = model(&dir, "o0.json", 3, 0);
    let o1 = model(&dir, "o1.json", 3, 1);
    let v: Verdict = serde_json::from_slice(&run(&["decide", s(&o0), s(&o1)]).stdout).unwrap();
    assert!(!v.properly_isomorphic);

    assert_eq!(code(&run(&["decide", s(&c1), s(&o0)])), 2);
}

fn classify(args: &[&str]) -> ClassificationReport {
    let mut full = vec!["classify"];
    full.extend_from_slice(args);
    let out = run(&full);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("report re-parses")
}

#[test]
fn classify_examples() {
    let odd = classify(&["--n", "1", "--g", "3", "--a-range", "-2..2"]);
    assert!(odd.h_values.iter().all(|&h| h == 1));
    assert_eq!(odd.models.len(), 5 * 3 * 3);

    let even = classify(&["--n", "1", "--g", "2", "--a-range", "-2..2"]);
    assert_eq!(even.h_values.iter().max(), Some(&2));

    let toric = classify(&["--n", "1", "--g", "6", "--a-range", "-4..4", "--toric-only"]);
    assert!(!toric.models.is_empty());
    assert!(toric.h_values.iter().all(|&h| h == 1));
    assert!(toric.models.iter().all(|m| m.has_even_diagonal()));
}

#[test]
fn classify_is_deterministic_and_csv_mirrors_json() {
    let args = ["classify", "--n", "1", "--g", "4", "--a-range", "0..2"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let report: ClassificationReport = serde_json::from_slice(&a.stdout).unwrap();

    let mut csv_args = args.to_vec();
    csv_args.extend(["--format", "csv"]);
    let csv = String::from_utf8(run(&csv_args).stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "model,n,g,A,b,c,pi_class,he_class,h");
    assert_eq!(lines.len(), report.models.len() + 1);
}

#[test]
fn classify_out_is_reused() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let args = [
        "classify",
        "--n",
        "1",
        "--g",
        "2",
        "--a-range",
        "0..0",
        "--out",
        s(&out),
    ];
    let first = run(&args);
    assert_eq!(code(&first), 0);
    assert!(first.stdout.is_empty());
    let written = fs::read_to_string(&out).unwrap();
    let second = run(&args);
    assert_eq!(code(&second), 0);
    assert!(String::from_utf8_lossy(&second.stderr).contains("reusing"));
    assert_eq!(fs::read_to_string(&out).unwrap(), written);

    // different parameters recompute
    let third = run(&[
        "classify",
        "--n",
        "1",
        "--g",
        "2",
        "--a-range",
        "0..2",
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&third), 0);
    assert!(!String::from_utf8_lossy(&third.stderr).contains("reusing"));
    assert_ne!(fs::read_to_string(&out).unwrap(), written);
}

#[test]
fn classify_empty_or_malformed() {
    assert_eq!(
        code(&run(&[
            "classify",
            "--n",
            "1",
            "--g",
            "3",
            "--a-range",
            "0..0",
            "--toric-only"
        ])),
        2
    );
    assert_eq!(
        code(&run(&["classify", "--n", "1", "--g", "0", "--a-range", "0..0"])),
        2
    );
    assert_eq!(
        code(&run(&["classify", "--n", "1", "--g", "2", "--a-range", "3..1"])),
        1
    );
    assert_eq!(code(&run(&["classify", "--n", "1", "--g", "2"])), 1);
}

#[test]
fn lens_verify() {
    let out = run(&["lens-verify", "--b", "4", "--a", "1", "--s-max", "3"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["cohomology_ok"], true);
    let values: Vec<&str> = v["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_str().unwrap())
        .collect();
    assert_eq!(values, ["zero", "order2", "zero"]);

    assert_eq!(code(&run(&["lens-verify", "--b", "2", "--a", "1", "--s-max", "3"])), 0);
    assert_eq!(code(&run(&["lens-verify", "--b", "4", "--a", "2"])), 2);
    assert_eq!(code(&run(&["lens-verify", "--b", "5", "--a", "1"])), 2);
}

#[test]
fn selftest_quick_is_deterministic() {
    let a = run(&["selftest", "--quick", "--seed", "7"]);
    let b = run(&["selftest", "--quick", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let suites = v.as_array().unwrap();
    assert_eq!(suites.len(), 3);
    assert!(suites
        .iter()
        .all(|s| s["cases"].as_u64().unwrap() > 0 && s["passed"] == true));
}

#[test]
fn usage_and_help() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["--version"])), 0);
}
