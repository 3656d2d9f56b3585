//! CLI acceptance: every command runs end to end, outputs carry the header
//! block, and identical config + seed give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_helmix")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("helmix-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(bin()).args(args).output().expect("spawn helmix")
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn criterion_12_determinism_byte_identical_outputs() {
    let dir_a = tmp_dir("det-a");
    let dir_b = tmp_dir("det-b");
    for (dir, tag) in [(&dir_a, "a"), (&dir_b, "b")] {
        let _ = tag;
        let out = run(&[
            "limit-sweep",
            "--seed",
            "42",
            "--format",
            "csv",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let out = run(&[
            "eval",
            "--seed",
            "42",
            "--format",
            "csv",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let out = run(&[
            "regime",
            "--seed",
            "42",
            "--format",
            "json",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["limit_sweep.csv", "eval.csv", "regime.json"] {
        let a = read(&dir_a.join(name));
        let b = read(&dir_b.join(name));
        assert_eq!(a, b, "{name} differs between identical runs");
        assert!(a.starts_with("# helmix"), "{name} missing header block");
        assert!(a.contains("# seed = 42"));
        assert!(a.contains("# config_hash = "));
    }
    println!("criterion 12 determinism (byte-identical bodies): PASS");
}

#[test]
fn different_seed_changes_sampled_outputs_only() {
    let dir_a = tmp_dir("seed-a");
    let dir_b = tmp_dir("seed-b");
    for (dir, seed) in [(&dir_a, "1"), (&dir_b, "2")] {
        let out = run(&[
            "limit-sweep",
            "--seed",
            seed,
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let a = read(&dir_a.join("limit_sweep.csv"));
    let b = read(&dir_b.join("limit_sweep.csv"));
    assert_ne!(a, b, "different seeds must sample different probe states");
}

#[test]
fn limit_sweep_accepts_explicit_probe_list() {
    let dir = tmp_dir("probes");
    let cfg = dir.join("family.cfg");
    fs::write(
        &cfg,
        "[family]\nkind = volume_additive_drift\ndrift = 0.3\nt = 298.0\n\n[probes]\nlist = 500, 300; 450, 420\n",
    )
    .unwrap();
    let out = run(&[
        "limit-sweep",
        "--model",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir.join("limit_sweep.csv"));
    // two probes, eight schedule members
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 8);
}

#[test]
fn eval_reports_bundle_columns_with_units() {
    let dir = tmp_dir("eval");
    let out = run(&["eval", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let text = read(&dir.join("eval.csv"));
    let header_line = text
        .lines()
        .find(|l| !l.starts_with('#'))
        .expect("header row");
    for col in ["T[K]", "f[Pa]", "mu_1[J/kg]", "cp[J/(kg K)]"] {
        assert!(header_line.contains(col), "missing column {col}");
    }
    // 3x3 default state grid
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 10);
}

#[test]
fn consistency_verdict_for_default_water_is_stable() {
    let dir = tmp_dir("consistency");
    let out = run(&[
        "consistency",
        "--format",
        "json",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        "grid.t_count=5",
        "--set",
        "grid.p_count=5",
        "--set",
        "grid.x_per_edge=3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(&dir.join("consistency.json"));
    let json_start = text.find('{').unwrap();
    let v: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    assert_eq!(v["stable"], serde_json::Value::Bool(true));
}

#[test]
fn excess_volume_with_zero_dv_is_identically_zero() {
    let dir = tmp_dir("excess");
    let out = run(&[
        "excess-volume",
        "--dv",
        "0",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = read(&dir.join("excess_volume.csv"));
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let v: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(v, 0.0);
    }
}

#[test]
fn regime_json_reports_paper_scale_numbers() {
    let dir = tmp_dir("regime");
    let out = run(&[
        "regime",
        "--format",
        "json",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = read(&dir.join("regime.json"));
    let json_start = text.find('{').unwrap();
    let v: serde_json::Value = serde_json::from_str(&text[json_start..]).unwrap();
    let beta0 = v["report"]["scaling"]["beta0"].as_f64().unwrap();
    let alpha0 = v["report"]["scaling"]["alpha0"].as_f64().unwrap();
    let lhs = v["inequality_at_reference"]["lhs"].as_f64().unwrap();
    let rhs = v["inequality_at_reference"]["rhs"].as_f64().unwrap();
    assert!((beta0 - 6.07).abs() / 6.07 < 0.01);
    assert!((alpha0 - 0.46).abs() / 0.46 < 0.01);
    assert!((lhs - 37.0).abs() / 37.0 < 0.01);
    assert!((rhs - 5618.0).abs() / 5618.0 < 0.02);
}

#[test]
fn validate_flags_broken_modulus_with_exit_code_4() {
    let dir = tmp_dir("validate");
    // wrong-sign modulus: diagnostics written, exit code 4
    let out = run(&[
        "validate",
        "--out",
        dir.to_str().unwrap(),
        "--set",
        "volume.modulus=-2.18e9",
        "--set",
        "grid.t_count=3",
        "--set",
        "grid.p_count=3",
        "--set",
        "grid.x_per_edge=2",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(dir.join("validate.csv").exists());
    let text = read(&dir.join("validate.csv"));
    assert!(text.contains("Violation"));

    // intact model: exit 0
    let dir_ok = tmp_dir("validate-ok");
    let out = run(&[
        "validate",
        "--out",
        dir_ok.to_str().unwrap(),
        "--set",
        "grid.t_count=3",
        "--set",
        "grid.p_count=3",
        "--set",
        "grid.x_per_edge=2",
    ]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_code_2() {
    let out = run(&["eval", "--model", "/nonexistent/model.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["eval", "--set", "malformed-override"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_with_code_3() {
    let dir = tmp_dir("domain");
    // a pressure below the elastic threshold leaves the declared domain
    let states = dir.join("states.csv");
    fs::write(&states, "T,p,x_1\n293.0,-3e9,1.0\n").unwrap();
    let out = run(&[
        "eval",
        "--states",
        states.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn dump_config_echoes_resolved_config() {
    let out = run(&["eval", "--dump-config", "--out", tmp_dir("dump").to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[model]"));
    assert!(stdout.contains("family = simple_law"));
}
