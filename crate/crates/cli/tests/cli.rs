use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ipdg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipdg"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_dualhex_8() {
    let dir = tempfile::tempdir().unwrap();
    let out = ipdg(&["generate", "dualhex", "8", "m.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.path().join("m.json"))["cells"].as_array().unwrap().len(), 81);
    assert!(String::from_utf8_lossy(&out.stdout).contains("cells 81"));
}

#[test]
fn generate_hybrid_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = ipdg(&["generate", "hybrid", "2", "m.json"], dir.path());
    assert!(out.status.success());
    assert_eq!(json(&dir.path().join("m.json"))["cells"].as_array().unwrap().len(), 12);
}

#[test]
fn bad_family_and_bad_n_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = ipdg(&["generate", "triangles", "4", "m.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = ipdg(&["generate", "hybrid", "3", "m.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn solve_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ipdg(&["generate", "dualhex", "8", "m.json"], dir.path()).status.success());
    let out = ipdg(&["solve", "m.json", "--problem", "sinsin", "r.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("r.json"));
    let e = &r["errors"];
    let (l2, h1, en) = (e["l2"].as_f64().unwrap(), e["h1_broken"].as_f64().unwrap(), e["energy"].as_f64().unwrap());
    assert!(l2.is_finite() && h1.is_finite() && en.is_finite());
    assert!(en >= h1);
    assert_eq!(r["solver"]["converged"], Value::Bool(true));
    assert_eq!(r["solver"]["method"], "cg");
    assert_eq!(r["solution"]["coefficients"].as_array().unwrap().len(), 81 * 3);
}

#[test]
fn dualhex_16_matches_reference_magnitude() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ipdg(&["generate", "dualhex", "16", "m.json"], dir.path()).status.success());
    let out = ipdg(&["solve", "m.json", "--degree", "1", "--delta", "1", "--alpha", "10", "r.json"], dir.path());
    assert!(out.status.success());
    let l2 = json(&dir.path().join("r.json"))["errors"]["l2"].as_f64().unwrap();
    assert!(l2 > 0.0461 / 2.0 && l2 < 0.0461 * 2.0, "{l2}");
}

#[test]
fn tiny_penalty_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ipdg(&["generate", "dualhex", "8", "m.json"], dir.path()).status.success());
    let out = ipdg(&["solve", "m.json", "--alpha", "0.01", "--delta", "1", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not positive definite"));
}

#[test]
fn non_convergence_still_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ipdg(&["generate", "dualhex", "8", "m.json"], dir.path()).status.success());
    let out = ipdg(&["solve", "m.json", "--tol", "1e-300", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let r = json(&dir.path().join("r.json"));
    assert_eq!(r["solver"]["converged"], Value::Bool(false));
}

#[test]
fn nonsymmetric_variant_solves() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ipdg(&["generate", "hybrid", "4", "m.json"], dir.path()).status.success());
    let out = ipdg(&["solve", "m.json", "--delta", "-1", "--alpha", "0.1", "r.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&dir.path().join("r.json"))["solver"]["method"], "bicgstab");
}

#[test]
fn resolving_a_reread_mesh_is_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ipdg(&["generate", "hybrid", "4", "m.json"], dir.path()).status.success());
    let m = std::fs::read_to_string(dir.path().join("m.json")).unwrap();
    std::fs::write(dir.path().join("m2.json"), &m).unwrap();
    assert!(ipdg(&["solve", "m.json", "a.json"], dir.path()).status.success());
    assert!(ipdg(&["solve", "m2.json", "b.json"], dir.path()).status.success());
    let (a, b) = (json(&dir.path().join("a.json")), json(&dir.path().join("b.json")));
    assert_eq!(a["errors"], b["errors"]);
    assert_eq!(a["solution"], b["solution"]);
}

#[test]
fn convergence_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let out = ipdg(
        &["convergence", "dualhex", "4", "8", "16", "--problem", "sinsin", "--csv", "c.csv", "--svg", "c.svg"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(csv.starts_with("h,cells,dofs,e_L2,e_H1,e_energy,rate_L2,rate_H1,rate_energy,iters"));
    assert_eq!(csv.lines().count(), 4);
    let svg = std::fs::read_to_string(dir.path().join("c.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("slope 2"));
    let report = ipdg::ConvergenceReport::from_csv(&csv).unwrap();
    assert_eq!(report.levels.len(), 3);
}

#[test]
fn convergence_rejects_repeated_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = ipdg(&["convergence", "hybrid", "4", "4", "--csv", "c.csv", "--svg", "c.svg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("levels must strictly decrease h"));
}

#[test]
fn audit_unit_square() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sq.json"),
        r#"{"vertices": [[0,0],[1,0],[1,1],[0,1]], "cells": [[0,1,2,3]]}"#,
    )
    .unwrap();
    let out = ipdg(&["audit", "sq.json", "a.json"], dir.path());
    assert!(out.status.success());
    let r = json(&dir.path().join("a.json"));
    assert!((r["rho_v"].as_f64().unwrap() - 0.5).abs() < 1e-14);
}

#[test]
fn audit_dualhex_and_sliver() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ipdg(&["generate", "dualhex", "8", "m.json"], dir.path()).status.success());
    assert!(ipdg(&["audit", "m.json", "a.json"], dir.path()).status.success());
    assert!(json(&dir.path().join("a.json"))["kappa"].as_f64().unwrap() > 0.3);

    // a thin sliver triangle resting on top of a square
    std::fs::write(
        dir.path().join("s.json"),
        r#"{"vertices": [[0,0],[1,0],[1,1],[0,1],[0.5,1.000001]],
            "cells": [[0,1,2,3],[3,2,4]]}"#,
    )
    .unwrap();
    let out = ipdg(&["audit", "s.json", "b.json"], dir.path());
    assert!(out.status.success());
    let r = json(&dir.path().join("b.json"));
    assert_eq!(r["worst"]["rho_v_cell"], 1);
    assert!(!r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn audit_unreadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = ipdg(&["audit", "missing.json", "a.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    let out = ipdg(&["audit", "bad.json", "a.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}
