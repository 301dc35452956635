use std::path::Path;
use std::process::{Command, Output};

use gpam::littlewood_paley::DyadicPartition;
use gpam::noise::{renorm_constant, NoiseLevel};
use gpam::Grid;

fn gpam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpam")).args(args).env_remove("GPAM_OUTPUT_ROOT").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap_or_else(|| panic!("no {key} in {text}"))
}

#[test]
fn audit_budget_reports_feasible_margin() {
    let o = gpam(&["audit-budget", "--kappa", "0.1", "--alpha", "0.67", "--eps", "0.001", "--delta", "0.101"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(value(&s, "feasible"), "true");
    assert!(value(&s, "margin").parse::<f64>().unwrap() > 0.0);
    let o = gpam(&["audit-budget", "--kappa", "0.2", "--alpha", "0.67", "--eps", "0.001", "--delta", "0.201"]);
    assert_eq!(value(&stdout(&o), "feasible"), "false");
}

#[test]
fn renorm_constant_is_bit_exact() {
    let o = gpam(&["renorm-constant", "--n", "5", "--t", "1.0", "--grid", "128"]);
    assert!(o.status.success());
    let printed: f64 = stdout(&o).trim().parse().unwrap();
    let p = DyadicPartition::sharp(&Grid::new(128).unwrap());
    let lib = renorm_constant(&p, NoiseLevel::Level(5), 1.0).unwrap();
    assert_eq!(printed.to_bits(), lib.to_bits());
}

#[test]
fn exit_codes() {
    assert_eq!(gpam(&["audit-budget", "--bogus"]).status.code(), Some(2));
    assert_eq!(gpam(&["renorm-constant", "--kappa", "1.5"]).status.code(), Some(2));
    assert_eq!(gpam(&["renorm-constant", "--grid", "30"]).status.code(), Some(2));
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("blow");
    let o = gpam(&[
        "solve", "naive", "--F", "linear:1000", "--u0", "1", "--grid", "16", "--dt", "0.01", "--T", "1",
        "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn flags_override_config_and_config_is_persisted() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(&cfg, "[grid]\nn = 16\ndt = 0.05\nt_final = 0.2\n[noise]\nseed = 9\n").unwrap();
    let out = d.path().join("out");
    let o = gpam(&["solve", "renorm", "--config", cfg.to_str().unwrap(), "--grid", "32", "--u0", "1", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let eff = gpam::experiments::RunConfig::load(&out.join("config.toml")).unwrap();
    assert_eq!(eff.grid.n, 32);
    assert_eq!(eff.noise.seed, 9);
    assert_eq!(eff.grid.dt, 0.05);
    let manifest: gpam::experiments::RunManifest = gpam::io::read_json(&out.join("run.json")).unwrap();
    assert_eq!(manifest.grid, 32);
    assert_eq!(manifest.seed, 9);
    assert!(out.join("trajectory/manifest.json").exists());
}

#[test]
fn output_root_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gpam"))
        .args(["sample-noise", "--grid", "16", "--seed", "3"])
        .env("GPAM_OUTPUT_ROOT", d.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let pcf = d.path().join("sample-noise/eta.pcf");
    assert_eq!(std::fs::metadata(&pcf).unwrap().len(), 16 + 8 * 256);
    assert!(d.path().join("sample-noise/config.toml").exists());
}

fn read(dir: &Path, f: &str) -> Vec<u8> {
    std::fs::read(dir.join(f)).unwrap()
}

#[test]
fn studies_are_byte_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for out in [&a, &b] {
        let o = gpam(&[
            "convergence-study", "--F", "sin", "--levels", "1..7", "--seeds", "2", "--grid", "32", "--dt", "0.05", "--T", "0.2",
            "--u0", "1", "--diagnostic-seeds", "1", "--output", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["convergence.csv", "convergence_naive.csv", "per_seed.csv", "max_principle.csv", "summary.json"] {
        assert_eq!(read(&a, f), read(&b, f), "{f}");
    }
    let csv = String::from_utf8(read(&a, "convergence.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "level_pair,median_diff,q25,q75,seeds");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn enhance_and_inequality_outputs() {
    let d = tempfile::tempdir().unwrap();
    let e = d.path().join("enh");
    let o = gpam(&["enhance", "--grid", "32", "--n", "1", "--times", "0.5,1", "--output", e.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: gpam::io::EnhancedManifest = gpam::io::read_json(&e.join("manifest.json")).unwrap();
    assert_eq!(m.resonant_files.len(), 2);
    assert_eq!(gpam(&["enhance", "--grid", "32", "--n", "2", "--output", e.to_str().unwrap()]).status.code(), Some(2));

    let s = d.path().join("suite");
    let o = gpam(&[
        "inequality-suite", "--only", "interpolation,localizer_high", "--resolutions", "16,32", "--seeds", "3", "--output",
        s.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(read(&s, "inequality_suite.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "spec,resolution,max_ratio,median_ratio,slope,pass");
    assert_eq!(csv.lines().count(), 5);
    assert!(s.join("inequality_suite.json").exists());
}
