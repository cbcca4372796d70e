use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn sosbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sosbound")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    })
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn path(p: &PathBuf) -> &str {
    p.to_str().unwrap()
}

#[test]
fn certify_then_verify_z2() {
    let file = tmp("z2.json");
    let out = sosbound(&["certify", "--name", "z2", "--beta", "1", "--sigma", "1", "--certificate-out", path(&file)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["valid"], true);
    let out = sosbound(&["verify", path(&file)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["valid"], true);
}

#[test]
fn tampered_certificate_fails() {
    let file = tmp("z3_tampered.json");
    let out = sosbound(&["certify", "--name", "z3", "--r", "rho", "--certificate-out", path(&file)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    doc["gram"][0][0][0] = Value::String("1/100".into());
    std::fs::write(&file, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = sosbound(&["verify", path(&file)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["valid"], false);
}

#[test]
fn xy3_outside_region_exits_nonzero() {
    let out = sosbound(&["certify", "--name", "xy3", "--beta", "12"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["valid"], false);
    assert!(v["error"].as_str().unwrap().contains("beta^2 - 12 beta + 4"));
}

#[test]
fn bound_mean_z_degree_two() {
    let out = sosbound(&["bound", "--moment", "z", "--degree", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["normalized_verified"].as_f64().unwrap() <= 1.0 + 1e-6);
}

#[test]
fn bound_y_squared_degree_six_with_certificate() {
    let file = tmp("y2_d6.json");
    let out = sosbound(&["bound", "--moment", "y^2", "--degree", "6", "--certificate-out", path(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["normalized_verified"].as_f64().unwrap() <= 1.1694 + 1e-3);
    let out = sosbound(&["verify", path(&file)]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn constant_aux_function_gives_no_bound() {
    let out = sosbound(&["bound", "--moment", "z", "--degree", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["numeric_optimum"].is_null());
}

#[test]
fn config_file_matches_flags_and_is_reproducible() {
    let cfg = tmp("bound.toml");
    std::fs::write(
        &cfg,
        "task = \"bound\"\nmoment = \"z^2\"\ndegree = 2\n[system]\nbeta = \"8/3\"\nsigma = \"10\"\nr = \"28\"\n",
    )
    .unwrap();
    let a = sosbound(&["--config", path(&cfg)]);
    let b = sosbound(&["--config", path(&cfg)]);
    let c = sosbound(&["bound", "--moment", "z^2", "--degree", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn config_missing_required_field() {
    let cfg = tmp("incomplete.toml");
    std::fs::write(&cfg, "task = \"bound\"\ndegree = 2\n").unwrap();
    let out = sosbound(&["--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("moment"));
}

#[test]
fn relations_table() {
    let out = sosbound(&["relations"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let rows = v["relations"].as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r["verified"] == true));
}

#[test]
fn region_csv() {
    let out = sosbound(&["region", "--sigmas", "10", "--betas", "8/3,11", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("8/3,10,true,true"));
    assert!(lines[2].starts_with("11,10,false,true"));
}

#[test]
fn orbit_with_csv_export() {
    let csv = tmp("orbit.csv");
    let out = sosbound(&["orbit", "--symbols", "+-", "--csv", path(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["orbit"]["residual"].as_f64().unwrap() <= 1e-10);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,x,y,z\n") && text.lines().count() > 1000);
}

#[test]
fn short_average_and_output_file() {
    let file = tmp("average.json");
    let out = sosbound(&["average", "--t-total", "300", "--output", path(&file)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert_eq!(v["averages"]["moments"].as_array().unwrap().len(), 18);
}

#[test]
fn summary_report() {
    let out = sosbound(&["report", "--t-total", "1100"]);
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 18);
    let z3 = rows.iter().find(|r| r["moment"] == "z^3").unwrap();
    assert_eq!(z3["best_bound"], 1.0);
    let z = rows.iter().find(|r| r["moment"] == "z").unwrap();
    assert!((z["best_bound"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(out.status.code(), Some(0), "{v}");
}
