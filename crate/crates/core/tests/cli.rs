use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_incentive-duality")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = bin(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_verb_writes_its_summary() {
    let dir = tempfile::tempdir().unwrap();
    let verbs: [&[&str]; 7] = [
        &["concavify"],
        &["solve-bs", "--paths", "2000"],
        &["hedge-sim", "--paths", "100", "--steps", "64"],
        &["driftless-sim", "--paths", "1000", "--steps", "256"],
        &["scaling"],
        &["discrete"],
        &["models-diag", "--paths", "1000", "--steps", "64"],
    ];
    for args in verbs {
        let out_dir = dir.path().join(args[0]);
        let mut full = args.to_vec();
        full.extend(["--out", out_dir.to_str().unwrap()]);
        let v = json(&full);
        assert_eq!(v["command"], args[0]);
        assert!(out_dir.join(format!("{}.json", args[0])).exists());
    }
    assert!(dir.path().join("concavify/envelope.csv").exists());
}

#[test]
fn exit_codes() {
    let missing = bin(&["concavify", "--config", "/nonexistent/run.toml"]);
    assert_eq!(missing.status.code(), Some(2));

    let degenerate = bin(&["solve-bs", "--mu", "0"]);
    assert_eq!(degenerate.status.code(), Some(4));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("feller.json");
    fs::write(
        &cfg,
        r#"{"model":{"model":{"kind":"heston","kappa":0.5,"theta_bar":0.04,"xi":1.0,"rho":-0.5,"y0":0.04,"f":{"kind":"zero"}},"horizon":1.0,"n_steps":64}}"#,
    )
    .unwrap();
    let feller = bin(&["models-diag", "--config", cfg.to_str().unwrap(), "--paths", "100"]);
    assert_eq!(feller.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&feller.stderr).contains("Feller"));

    let unknown = dir.path().join("typo.toml");
    fs::write(&unknown, "[utilty]\nkind = \"log\"\n").unwrap();
    assert_eq!(bin(&["concavify", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn discrete_presets() {
    let v = json(&["discrete", "--preset", "counterexample"]);
    assert!((v["gap"].as_f64().unwrap() - 3f64.sqrt() / 4.0).abs() <= 1e-8);
    let v = json(&["discrete", "--preset", "concave"]);
    assert!(v["gap"].as_f64().unwrap().abs() <= 1e-12);
}

#[test]
fn atom_verdicts() {
    let v = json(&["models-diag", "--preset", "hull-white", "--paths", "5000", "--steps", "128"]);
    assert_eq!(v["diagnostic"]["verdict"], "no_atom_detected");
    let v = json(&["models-diag", "--preset", "zero-rate", "--paths", "2000"]);
    assert_eq!(v["diagnostic"]["verdict"]["atom_at"]["value"], 1.0);
    assert_eq!(v["diagnostic"]["verdict"]["atom_at"]["mass"], 1.0);
}

#[test]
fn alpha_scan_and_rra_tables() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&["solve-bs", "--alpha-scan", "--paths", "2000", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(v["alpha_scan"]["alpha"], "none");
    assert!(v["alpha_scan"]["reason"].as_str().unwrap().contains("no optimal alpha"));
    let header = fs::read_to_string(dir.path().join("figure2_rra_p.csv")).unwrap();
    assert!(header.starts_with("y,rra_0.125,rra_0.25,rra_0.5,rra_0.75"));
    assert!(dir.path().join("figure2_rra_k.csv").exists());
}

#[test]
fn toml_config_is_applied() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[utility]\nkind = \"power\"\np = 0.5\n[incentive]\nkind = \"call\"\nlambda = 0.25\nk = 6.0\n")
        .unwrap();
    let v = json(&["solve-bs", "--config", cfg.to_str().unwrap(), "--paths", "1000"]);
    assert!((v["x_star"].as_f64().unwrap() - 12.0).abs() <= 1e-12);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = bin(&[
            "hedge-sim",
            "--paths",
            "200",
            "--steps",
            "64",
            "--seed",
            "9",
            "--dump",
            "--threads",
            threads,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(read_dir_sorted(a.path()), read_dir_sorted(b.path()));
}
