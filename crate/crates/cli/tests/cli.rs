use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn ksbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ksbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(initial_u: &str, p: f64, t_end: f64, extra: &str) -> String {
    format!(
        r#"{{
  "variant": "parabolic_parabolic",
  "nonlinearity": {{"kind": "power", "p": {p}}},
  "initial_u": {initial_u},
  "cells": 64,
  "dt_initial": 1e-4,
  "dt_min": 1e-12,
  "dt_max": 1e-2,
  "t_end": {t_end},
  "t0_monitor": 0.05{extra}
}}"#
    )
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn steady_run_exits_zero_with_exact_residuals() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "steady.json", &scenario(r#"{"profile": "constant", "mass": 1.0}"#, 1.0, 0.5, ""));
    let out = dir.path().join("out");
    let res = ksbound(&["--dense", "run", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let samples = fs::read_to_string(out.join("samples.csv")).unwrap();
    for col in ["identity_residual", "cross_term_residual"] {
        assert!(column(&samples, col).iter().all(|r| r.abs() <= 1e-12), "{col}");
    }
    let dense = fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert!(column(&dense, "identity_residual").iter().all(|r| r.abs() <= 1e-12));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.starts_with("status: Completed"));
    assert!(out.join("plot.py").exists());
}

#[test]
fn runs_are_byte_reproducible() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bump.json",
        &scenario(r#"{"profile": "cosine", "mass": 5.0}"#, 1.0, 0.2, ""),
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for o in [&a, &b] {
        assert_eq!(ksbound(&["run", &cfg, "-o", o.to_str().unwrap()]).status.code(), Some(0));
    }
    assert_eq!(
        fs::read(a.join("samples.csv")).unwrap(),
        fs::read(b.join("samples.csv")).unwrap()
    );
}

#[test]
fn threshold_crossing_exits_two_and_reports_time() {
    let dir = tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "blowup.json",
        &scenario(
            r#"{"profile": "cosine", "mass": 20.0}"#,
            2.0,
            5.0,
            ",\n  \"blowup_threshold\": 100.0",
        ),
    );
    let out = dir.path().join("out");
    let res = ksbound(&["run", &cfg, "-o", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("blow-up time:"), "{report}");
}

#[test]
fn invalid_configs_exit_one_with_a_line() {
    let dir = tempdir().unwrap();
    let text = scenario(r#"{"profile": "constant", "mass": 1.0}"#, 1.0, 0.5, "").replace("\"cells\": 64", "\"cells\": 2");
    let cfg = write_config(dir.path(), "bad.json", &text);
    let res = ksbound(&["run", &cfg, "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 5"), "{err}");

    let typo = scenario(r#"{"profile": "constant", "mass": 1.0}"#, 1.0, 0.5, ",\n  \"t_ned\": 1.0");
    let cfg = write_config(dir.path(), "typo.json", &typo);
    let res = ksbound(&["run", &cfg, "-o", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 11"));

    let res = ksbound(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn unknown_suite_and_bad_usage_exit_one() {
    assert_eq!(ksbound(&["verify", "nonsense"]).status.code(), Some(1));
    assert_eq!(ksbound(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ksbound(&["--help"]).status.code(), Some(0));
}

#[test]
fn steady_suite_passes() {
    let res = ksbound(&["verify", "steady"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    assert!(String::from_utf8_lossy(&res.stdout).contains("PASS"));
}

#[test]
fn sweep_writes_sorted_phase_table() {
    let dir = tempdir().unwrap();
    let base = scenario(r#"{"profile": "cosine", "mass": 1.0}"#, 1.0, 0.2, "");
    let cfg = write_config(
        dir.path(),
        "sweep.json",
        &format!(r#"{{"base": {base}, "p": [2.0, 1.0], "mass": [5.0, 1.0]}}"#),
    );
    let out = dir.path().join("sweep");
    let res = ksbound(&["sweep", &cfg, "-o", out.to_str().unwrap(), "-j", "2"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let phase = fs::read_to_string(out.join("phase.csv")).unwrap();
    let rows: Vec<&str> = phase.lines().collect();
    assert_eq!(rows[0], "p,M,status,sup_u_final,t_stop");
    let keys: Vec<String> = rows[1..].iter().map(|r| r.split(',').take(2).collect::<Vec<_>>().join(",")).collect();
    assert_eq!(keys, ["1,1", "1,5", "2,1", "2,5"]);
    assert!(out.join("summary.txt").exists());
    assert!(out.join("p1_M5").join("samples.csv").exists());
}

#[test]
fn degenerate_sweep_matches_run() {
    let dir = tempdir().unwrap();
    let base = scenario(r#"{"profile": "cosine", "mass": 3.0}"#, 1.0, 0.2, "");
    let sweep_cfg = write_config(
        dir.path(),
        "sweep.json",
        &format!(r#"{{"base": {base}, "p": [1.0], "mass": [3.0]}}"#),
    );
    let run_cfg = write_config(dir.path(), "run.json", &base);
    let s = dir.path().join("s");
    let r = dir.path().join("r");
    assert_eq!(ksbound(&["sweep", &sweep_cfg, "-o", s.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(ksbound(&["run", &run_cfg, "-o", r.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(
        fs::read(s.join("p1_M3").join("samples.csv")).unwrap(),
        fs::read(r.join("samples.csv")).unwrap()
    );
}
