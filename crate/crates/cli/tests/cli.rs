use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn gqtm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gqtm"))
        .args(args)
        .env_remove("GQTM_STEP_BUDGET")
        .env_remove("GQTM_MAX_SITES")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = gqtm(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Parses a CSV body (header skipped) into rows of floats.
fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn word_examples() {
    assert_eq!(
        stdout(&["word", "--n", "2", "--source", "substitution"]),
        "00010000011000\n"
    );
    assert_eq!(
        stdout(&["word", "--n", "2", "--source", "simulate"]),
        "000100000110000\n"
    );
    assert_eq!(
        stdout(&["word", "--single-marker", "--limit", "14", "--source", "substitution"]),
        "00010000011000\n"
    );
}

#[test]
fn figure_word_matches_construction() {
    let sim = stdout(&["word", "--n", "6"]);
    let sub = stdout(&["word", "--n", "6", "--source", "substitution"]);
    assert_eq!(
        sim.trim_end().trim_end_matches('0'),
        sub.trim_end().trim_end_matches('0')
    );
    assert_eq!(sim.trim_end().len(), sub.trim_end().len() + 1);
}

#[test]
fn multi_counter_sources_agree() {
    let sim = stdout(&["word", "--n", "3,3,3", "--gamma", "0.7"]);
    let sub = stdout(&["word", "--n", "3,3,3", "--source", "substitution"]);
    assert_eq!(
        sim.trim_end().trim_end_matches('0'),
        sub.trim_end().trim_end_matches('0')
    );
}

#[test]
fn files_and_manifest_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a/run");
    let b = dir.path().join("b/run");
    for prefix in [&a, &b] {
        let out = gqtm(&["word", "--n", "4", "--out", prefix.to_str().unwrap()]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    for suffix in [".word.txt", ".profile.json"] {
        let read = |p: &Path| fs::read(format!("{}{suffix}", p.display())).unwrap();
        assert_eq!(read(&a), read(&b), "{suffix}");
    }

    let manifest: Value = serde_json::from_slice(&fs::read(format!("{}.manifest.json", a.display())).unwrap()).unwrap();
    assert_eq!(manifest["command"], "word");
    assert_eq!(manifest["params"]["layout"]["n"][0], 4);
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), 2);
    for art in artifacts {
        let data = fs::read(a.parent().unwrap().join(art["path"].as_str().unwrap())).unwrap();
        assert_eq!(art["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&data)));
    }

    let profile: Value = serde_json::from_slice(&fs::read(format!("{}.profile.json", a.display())).unwrap()).unwrap();
    assert_eq!(profile["ones"], 15);
    assert_eq!(profile["run_count"], 8);
}

#[test]
fn profile_of_small_word() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("w");
    assert!(gqtm(&[
        "word",
        "--n",
        "2",
        "--source",
        "substitution",
        "--out",
        prefix.to_str().unwrap()
    ])
    .status
    .success());
    let profile: Value =
        serde_json::from_slice(&fs::read(format!("{}.profile.json", prefix.display())).unwrap()).unwrap();
    assert_eq!(profile["length"], 14);
    assert_eq!(profile["runs"], serde_json::json!([[3, 1], [5, 2]]));
    assert_eq!(profile["trailing_gap"], 3);
}

#[test]
fn free_chain_spectrum() {
    let csv = stdout(&["spectrum", "--n", "6", "--gamma", "1", "--sites", "65"]);
    assert!(csv.starts_with("index,eigenvalue\n"));
    let values = rows(&csv);
    assert_eq!(values.len(), 65);
    for (m, row) in values.iter().enumerate() {
        let expect = 2.0 * (1.0 - (std::f64::consts::PI * (m + 1) as f64 / 66.0).cos());
        assert_eq!(row[0] as usize, m);
        assert!((row[1] - expect).abs() < 1e-9, "mode {m}");
    }
}

#[test]
fn uniform_chain_transmits() {
    let csv = stdout(&["transmit", "--gamma", "1", "--energies", "0.1:3.9:0.1"]);
    assert!(csv.starts_with("energy,transmission\n"));
    let values = rows(&csv);
    assert_eq!(values.len(), 39);
    assert!(values.iter().all(|r| (r[1] - 1.0).abs() < 1e-10));
}

#[test]
fn weighted_chain_transmits_partially() {
    let values = rows(&stdout(&[
        "transmit",
        "--n",
        "3",
        "--gamma",
        "0.5",
        "--energies",
        "0.5:3.5:0.5",
    ]));
    assert!(values.iter().all(|r| r[1] > 0.0 && r[1] <= 1.0 + 1e-10));
    assert!(values.iter().any(|r| r[1] < 0.99));
}

#[test]
fn evolution_conserves_norm() {
    let csv = stdout(&["evolve", "--gamma", "0.5", "--n", "6", "--t", "20"]);
    assert!(csv.starts_with("time,site,probability\n"));
    let values = rows(&csv);
    let mut norms: Vec<(f64, f64)> = Vec::new();
    for r in &values {
        match norms.last_mut() {
            Some((t, s)) if *t == r[0] => *s += r[2],
            _ => norms.push((r[0], r[2])),
        }
    }
    assert_eq!(norms.len(), 11);
    assert_eq!(norms.last().unwrap().0, 20.0);
    for (t, norm) in norms {
        assert!((norm - 1.0).abs() < 1e-10, "t={t}: {norm}");
    }
}

#[test]
fn evolution_methods_agree() {
    let args = ["evolve", "--n", "3", "--t", "3", "--frames", "2"];
    let exact = rows(&stdout(&args));
    let mut stepper_args = args.to_vec();
    stepper_args.extend(["--method", "stepper"]);
    let stepper = rows(&stdout(&stepper_args));
    for (a, b) in exact.iter().zip(&stepper) {
        assert!((a[2] - b[2]).abs() < 1e-9);
    }
}

#[test]
fn verify_passes_and_reports() {
    let out = gqtm(&["verify", "--n-max", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("PASS"));
}

#[test]
fn verify_names_injected_fault() {
    let out = gqtm(&["verify", "--n-max", "3", "--inject-fault", "simulation:4"]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&Value> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["name"], "simulation_matches_expansion");
    assert_eq!(failed[0]["mismatch_index"], 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bit 4"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["word"],
        vec!["word", "--single-marker"],
        vec!["word", "--n", "0"],
        vec!["word", "--n", "2", "--gamma", "1.5"],
        vec!["word", "--n", "2", "--single-marker"],
        vec!["transmit", "--energies", "0:1:0.1"],
        vec!["transmit", "--energies", "1:2"],
        vec!["verify", "--n-max", "0"],
        vec!["verify", "--inject-fault", "nowhere:3"],
        vec!["spectrum", "--sites", "0"],
        vec!["bogus"],
    ] {
        let out = gqtm(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn budgets_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_gqtm"))
        .args(["word", "--n", "3"])
        .env("GQTM_STEP_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = Command::new(env!("CARGO_BIN_EXE_gqtm"))
        .args(["spectrum", "--n", "2", "--sites", "100"])
        .env("GQTM_MAX_SITES", "50")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
