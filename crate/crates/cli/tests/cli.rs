use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use serde_json::Value;
use tempfile::TempDir;
use vesd::sim::{generate_sample, Model};

fn vesd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vesd"))
        .args(args)
        .output()
        .unwrap()
}

fn write_gaussian(dir: &Path, name: &str, n: usize, p: usize, seed: u64) -> PathBuf {
    let x = generate_sample(Model::GaussianIid, &DMatrix::identity(p, p), None, n, seed).unwrap();
    let path = dir.join(name);
    x.write_csv(fs::File::create(&path).unwrap(), false)
        .unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn tau_with_unit_vector_has_unit_kappa() {
    let dir = TempDir::new().unwrap();
    let data = write_gaussian(dir.path(), "x.csv", 30, 40, 1);
    let vector = dir.path().join("a.csv");
    fs::write(&vector, "0.6\n0.8\n".to_string() + &"0\n".repeat(38)).unwrap();
    let out = dir.path().join("out");
    let res = vesd(&[
        "tau",
        "--data",
        s(&data),
        "--vector",
        s(&vector),
        "--out",
        s(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report = json(&out.join("report.json"));
    assert_eq!(report["kappa"].as_f64().unwrap(), 1.0);
    assert!(report["estimate"].as_f64().unwrap() > 0.0);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["exit_code"], 0);
    let listed: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["path"].as_str().unwrap())
        .collect();
    assert_eq!(listed, ["report.json", "summary.txt", "vesd.csv"]);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn csv_report_format() {
    let dir = TempDir::new().unwrap();
    let data = write_gaussian(dir.path(), "x.csv", 30, 40, 2);
    let out = dir.path().join("out");
    let res = vesd(&[
        "sharpe",
        "--data",
        s(&data),
        "--out",
        s(&out),
        "--format",
        "csv",
    ]);
    // Zero-mean data may or may not clear the signal threshold; either way the
    // exit code has to come from the taxonomy.
    let code = res.status.code().unwrap();
    assert!(code == 0 || code == 5, "unexpected exit {code}");
    if code == 0 {
        let text = fs::read_to_string(out.join("report.csv")).unwrap();
        assert!(text.starts_with("field,value\ntarget,sharpe\n"));
    }
}

#[test]
fn mcc_reports_unclamped_value() {
    let dir = TempDir::new().unwrap();
    let data = write_gaussian(dir.path(), "xy.csv", 30, 41, 3);
    let out = dir.path().join("out");
    let res = vesd(&[
        "mcc",
        "--data",
        s(&data),
        "--response-column",
        "0",
        "--out",
        s(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let report = json(&out.join("report.json"));
    let d = &report["diagnostics"];
    assert_eq!(d["p"], 40);
    let raw = d["raw_estimate"].as_f64().unwrap();
    assert_eq!(report["estimate"].as_f64().unwrap(), raw.clamp(0.0, 1.0));
}

#[test]
fn malformed_csv_is_an_input_error_without_output() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "1,2,3\n4,oops,6\n7,8,9\n").unwrap();
    let out = dir.path().join("out");
    let res = vesd(&["sharpe", "--data", s(&data), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    let files: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(files, ["manifest.json"]);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["error"]["class"], "input");
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 0);
}

#[test]
fn zero_signal_exit_code() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("x.csv");
    fs::write(&data, "1,0,0\n0,1,0\n0,0,1\n").unwrap();
    let out = dir.path().join("out");
    let res = vesd(&["sharpe", "--data", s(&data), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(5));
    assert_eq!(
        json(&out.join("manifest.json"))["error"]["class"],
        "zero-signal"
    );
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = TempDir::new().unwrap();
    let data = write_gaussian(dir.path(), "x.csv", 10, 12, 4);
    let config = dir.path().join("cfg.json");
    fs::write(&config, r#"{"k": 4, "moments": 3}"#).unwrap();
    let out = dir.path().join("out");
    let res = vesd(&[
        "sharpe",
        "--data",
        s(&data),
        "--config",
        s(&config),
        "--out",
        s(&out),
    ]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn pseudo_r2_is_one_for_wide_data() {
    let dir = TempDir::new().unwrap();
    let data = write_gaussian(dir.path(), "xy.csv", 12, 20, 5);
    let out = dir.path().join("out");
    let res = vesd(&[
        "diagnose-pinv",
        "--data",
        s(&data),
        "--response-column",
        "3",
        "--out",
        s(&out),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let v = json(&out.join("report.json"))["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() < 1e-10);
}

const BATCH: &str = r#"{
  "seed": 11,
  "reps": 3,
  "scenarios": [{
    "cov_case": ["case1", "case2"],
    "vector_setting": ["dense1", "sparse1"],
    "n": [24, 32, 40],
    "cn": 1.25,
    "target": "tau"
  }]
}"#;

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> (Output, PathBuf) {
    let config = dir.join("batch.json");
    fs::write(&config, BATCH).unwrap();
    let out = dir.join(name);
    let mut args = vec!["simulate", "--config", s(&config), "--out", s(&out)];
    args.extend_from_slice(extra);
    (vesd(&args), out)
}

#[test]
fn batch_table_has_one_row_per_cell_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, out_a) = simulate(dir.path(), "a", &["--jobs", "1"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let (b, out_b) = simulate(dir.path(), "b", &["--jobs", "2"]);
    assert!(b.status.success());
    let table_a = fs::read(out_a.join("results.csv")).unwrap();
    let table_b = fs::read(out_b.join("results.csv")).unwrap();
    assert_eq!(table_a, table_b);
    let text = String::from_utf8(table_a).unwrap();
    assert_eq!(text.lines().count(), 13);
    assert!(!text.contains("wall"));
    let manifest = json(&out_a.join("manifest.json"));
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["artifacts"].as_array().unwrap().len(), 13);
}

#[test]
fn seed_override_changes_results() {
    let dir = TempDir::new().unwrap();
    let (_, base) = simulate(dir.path(), "a", &["--reps", "2"]);
    let (_, other) = simulate(dir.path(), "b", &["--reps", "2", "--seed", "12"]);
    let (a, b) = (
        fs::read(base.join("results.csv")).unwrap(),
        fs::read(other.join("results.csv")).unwrap(),
    );
    assert_ne!(a, b);
    assert_eq!(json(&other.join("manifest.json"))["seed"], 12);
}

#[test]
fn empty_batch_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("batch.json");
    fs::write(&config, r#"{"scenarios": []}"#).unwrap();
    let out = dir.path().join("out");
    let res = vesd(&["simulate", "--config", s(&config), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.join("results.csv").exists());
    assert!(out.join("manifest.json").exists());
}
