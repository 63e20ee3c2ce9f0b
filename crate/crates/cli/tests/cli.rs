use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn tokencycle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tokencycle"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = tokencycle(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn out_dir(tmp: &TempDir, name: &str) -> PathBuf {
    tmp.path().join(name)
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect()
}

fn sweep_means(tmp: &TempDir, param: &str, values: &str) -> Vec<f64> {
    let out = out_dir(tmp, param);
    ok(&[
        "sweep",
        &scenario("headline.scenario"),
        "--param",
        param,
        "--values",
        values,
        "--trials",
        "300",
        "--out",
        out.to_str().unwrap(),
    ]);
    csv_rows(&out.join("sweep.csv"))
        .iter()
        .map(|r| r[1].parse().unwrap())
        .collect()
}

fn write(tmp: &TempDir, name: &str, text: &str) -> String {
    let path = tmp.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn committed_scenarios_are_canonical() {
    for name in [
        "headline.scenario",
        "deterministic.scenario",
        "sweep.scenario",
        "tokenized.scenario",
        "tokenized-calibrated.scenario",
        "tokenized-equal.scenario",
        "tokenized-static.scenario",
        "subsidy.scenario",
    ] {
        let path = scenario(name);
        let out = ok(&["validate", "--canonical", &path]);
        assert_eq!(out.stdout, std::fs::read(&path).unwrap(), "{name} is not in canonical form");
    }
}

#[test]
fn validation_errors_name_fields_and_exit_3() {
    let tmp = TempDir::new().unwrap();
    let text = std::fs::read_to_string(scenario("deterministic.scenario")).unwrap();

    let bad = write(&tmp, "pmax.scenario", &text.replace("\"p_max\": 0.8", "\"p_max\": 1.5"));
    let out = tokencycle(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("params.p_max") && err.contains("[0,1]"), "{err}");

    let zero_supply = text.replacen("[\n            0.0,\n            50.0\n          ]", "[\n            0.0,\n            0.0\n          ]", 1);
    assert_ne!(zero_supply, text);
    let bad = write(&tmp, "supply.scenario", &zero_supply);
    let out = tokencycle(&["run", &bad]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("token_supply_schedule.breakpoints[0]"), "{err}");

    let bad = write(&tmp, "version.scenario", &text.replace("\"schema_version\": \"1\"", "\"schema_version\": \"2\""));
    assert_eq!(tokencycle(&["validate", &bad]).status.code(), Some(3));
}

#[test]
fn missing_input_exits_2_and_unwritable_output_exits_4() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("absent.scenario");
    assert_eq!(tokencycle(&["run", missing.to_str().unwrap()]).status.code(), Some(2));

    let blocker = write(&tmp, "blocker", "not a directory");
    let out = tokencycle(&[
        "run",
        &scenario("headline.scenario"),
        "--trials",
        "5",
        "--out",
        &format!("{blocker}/sub"),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn run_outputs_are_reproducible() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (out_dir(&tmp, "a"), out_dir(&tmp, "b"));
    for dir in [&a, &b] {
        ok(&[
            "run",
            &scenario("headline.scenario"),
            "--trials",
            "500",
            "--seed",
            "5",
            "--out",
            dir.to_str().unwrap(),
        ]);
    }
    for file in ["trials.csv", "summary.json", "histogram.csv"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }

    let rows = csv_rows(&a.join("trials.csv"));
    assert_eq!(rows.len(), 500);
    let hist: u64 = csv_rows(&a.join("histogram.csv")).iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    assert_eq!(hist, 500);

    // csv values round-trip to the summary exactly
    let summary = json(&a.join("summary.json"));
    let max = rows
        .iter()
        .map(|r| r[5].parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(summary["summary"]["max"].as_f64().unwrap(), max);

    let manifest = json(&a.join("manifest.json"));
    let bytes = std::fs::read(scenario("headline.scenario")).unwrap();
    assert_eq!(manifest["inputs"][0]["sha256"], hex::encode(Sha256::digest(&bytes)));
    assert_eq!(manifest["master_seed"], 5);
    assert_eq!(manifest["n_trials"], 500);
    assert!(manifest["tool_version"].is_string());
    assert!(manifest["finished_at"].is_string());
}

#[test]
fn single_trial_flags_std() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "one");
    ok(&["run", &scenario("headline.scenario"), "--trials", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(csv_rows(&out.join("trials.csv")).len(), 1);
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["summary"]["std_defined"], false);
}

#[test]
fn deterministic_run_writes_trajectory() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "det");
    ok(&["run", &scenario("deterministic.scenario"), "--trials", "3", "--out", out.to_str().unwrap()]);
    let traj = csv_rows(&out.join("trajectory.csv"));
    assert_eq!(traj.len(), 11);
    let last: f64 = traj[10][10].parse().unwrap();
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["summary"]["mean"].as_f64().unwrap(), last);
    assert_eq!(summary["summary"]["sample_std"].as_f64().unwrap(), 0.0);
}

#[test]
fn compare_reference_configs() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "cmp");
    ok(&[
        "compare",
        &scenario("tokenized.scenario"),
        &scenario("subsidy.scenario"),
        "--out",
        out.to_str().unwrap(),
    ]);
    let report = json(&out.join("comparison.json"));
    let sub = report["subsidy"]["mean"].as_f64().unwrap();
    assert!((sub + 45_007.0).abs() <= 0.01 * 45_007.0, "{sub}");
    assert_eq!(csv_rows(&out.join("paired.csv")).len(), 10_000);
    let hist = csv_rows(&out.join("histogram.csv"));
    let tok_total: u64 = hist.iter().map(|r| r[2].parse::<u64>().unwrap()).sum();
    let sub_total: u64 = hist.iter().map(|r| r[3].parse::<u64>().unwrap()).sum();
    assert_eq!((tok_total, sub_total), (10_000, 10_000));
}

#[test]
fn compare_degenerate_equal_configs() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "eq");
    ok(&[
        "compare",
        &scenario("tokenized-equal.scenario"),
        &scenario("subsidy.scenario"),
        "--trials",
        "2000",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report = json(&out.join("comparison.json"));
    let delta = report["mean_delta"].as_f64().unwrap();
    let se = report["paired_delta_std"].as_f64().unwrap() / (2000f64).sqrt();
    assert!(delta.abs() <= 3.0 * se + 1e-9, "delta {delta}, se {se}");
}

#[test]
fn compare_rejects_swapped_models() {
    let out = tokencycle(&["compare", &scenario("subsidy.scenario"), &scenario("tokenized.scenario")]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sensitivity_rows() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "sens");
    ok(&["sensitivity", &scenario("headline.scenario"), "--out", out.to_str().unwrap()]);
    let rows = csv_rows(&out.join("sensitivity.csv"));
    for row in &rows {
        let rel: f64 = row[4].parse().unwrap();
        assert!(rel <= 1e-6, "{row:?}");
    }
    let subsidy = rows.iter().find(|r| &r[0] == "subsidy").unwrap();
    assert_eq!(&subsidy[2], "1");
    assert!((subsidy[3].parse::<f64>().unwrap() - 1.0).abs() <= 1e-12);

    let out0 = out_dir(&tmp, "sens0");
    ok(&["sensitivity", &scenario("headline.scenario"), "--at-time", "0", "--out", out0.to_str().unwrap()]);
    for row in csv_rows(&out0.join("sensitivity.csv")) {
        if &row[0] == "token_value" || &row[0] == "unit_cost" {
            assert_eq!(row[2].parse::<f64>().unwrap(), 0.0, "{row:?}");
            assert_eq!(row[3].parse::<f64>().unwrap(), 0.0, "{row:?}");
        }
    }
}

#[test]
fn sweep_properties() {
    let tmp = TempDir::new().unwrap();
    let subsidy = sweep_means(&tmp, "subsidy", "0,1000");
    assert!(((subsidy[1] - subsidy[0]) - 1000.0).abs() <= 1e-9 * subsidy[0].abs().max(1.0), "{subsidy:?}");

    let carbon = sweep_means(&tmp, "carbon_credit_price", "0.5,1,2,4");
    assert!(carbon.windows(2).all(|w| w[1] >= w[0]), "{carbon:?}");

    let cost = sweep_means(&tmp, "unit_cost", "0,1,2,5");
    assert!(cost.windows(2).all(|w| w[1] <= w[0]), "{cost:?}");
}

#[test]
fn sweep_file_defaults_and_unknown_parameter() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "sw");
    ok(&["sweep", &scenario("sweep.scenario"), "--trials", "200", "--out", out.to_str().unwrap()]);
    assert_eq!(csv_rows(&out.join("sweep.csv")).len(), 6);

    let bad = tokencycle(&["sweep", &scenario("headline.scenario"), "--param", "bogus", "--values", "1"]);
    assert_eq!(bad.status.code(), Some(3));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("unit_cost") && err.contains("subsidy"), "{err}");
}

#[test]
fn calibrate_boundary_target_and_determinism() {
    let tmp = TempDir::new().unwrap();
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let out = out_dir(&tmp, name);
        ok(&[
            "calibrate",
            "--target",
            "-40000",
            "--base",
            &scenario("tokenized-static.scenario"),
            "--trials",
            "1000",
            "--out",
            out.to_str().unwrap(),
        ]);
        files.push(std::fs::read(out.join("comparative.calibration")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let cal: Value = serde_json::from_slice(&files[0]).unwrap();
    assert_eq!(cal["converged"], true);
    assert!(cal["token_value_sd"].as_f64().unwrap() < 1e-9);
    assert!(cal["elasticity"].as_f64().unwrap() < 1e-9);
    assert!(!cal["trace"].as_array().unwrap().is_empty());
}

#[test]
fn unreachable_calibration_exits_6_and_keeps_trace() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "cal");
    let result = tokencycle(&[
        "calibrate",
        "--base",
        &scenario("tokenized.scenario"),
        "--trials",
        "500",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&result.stderr).contains("best residual"));
    let cal = json(&out.join("comparative.calibration"));
    assert_eq!(cal["converged"], false);
    assert!(!cal["trace"].as_array().unwrap().is_empty());
}
