//! Command-line surface tests: subcommands, file formats and error paths.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_penlogit"))
}

fn write_dataset2_csv(path: &Path) {
    // x = 0: 19 non-events, 1 event; x = 1: 71 non-events, 9 events.
    let mut out = String::from("outcome,exposure\n");
    for (count, x, y) in [(19, 0, 0), (1, 0, 1), (71, 1, 0), (9, 1, 1)] {
        for _ in 0..count {
            out.push_str(&format!("{y},{x}\n"));
        }
    }
    std::fs::write(path, out).unwrap();
}

fn write_dataset1_csv(path: &Path) {
    let mut out = String::from("outcome,exposure\n");
    for (count, x, y) in [(20, 0, 0), (71, 1, 0), (9, 1, 1)] {
        for _ in 0..count {
            out.push_str(&format!("{y},{x}\n"));
        }
    }
    std::fs::write(path, out).unwrap();
}

#[test]
fn fit_firth_on_dataset2() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_dataset2_csv(&data);
    let json_out = dir.path().join("fit.json");
    let output = bin()
        .args([
            "fit",
            "--data",
            data.to_str().unwrap(),
            "--outcome",
            "outcome",
            "--method",
            "FC",
            "--json-out",
            json_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    let beta1 = report["coefficients"][1][1].as_f64().unwrap();
    assert!((beta1 - 0.55).abs() < 0.01, "FC estimate {beta1}");
    assert_eq!(report["separated"], false);
}

#[test]
fn fit_deviance_tuned_on_both_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let d2 = dir.path().join("d2.csv");
    write_dataset2_csv(&d2);
    let out2 = dir.path().join("d2.json");
    let output = bin()
        .args([
            "fit", "--data", d2.to_str().unwrap(), "--outcome", "outcome", "--method", "D",
            "--json-out", out2.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out2).unwrap()).unwrap();
    let beta1 = report["coefficients"][1][1].as_f64().unwrap();
    assert!((beta1 - 0.06).abs() < 0.03, "D estimate {beta1}");
    assert!(report["profile"].as_array().unwrap().len() == 200);

    let d1 = dir.path().join("d1.csv");
    write_dataset1_csv(&d1);
    let out1 = dir.path().join("d1.json");
    let output = bin()
        .args([
            "fit", "--data", d1.to_str().unwrap(), "--outcome", "outcome", "--method", "D",
            "--json-out", out1.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out1).unwrap()).unwrap();
    assert_eq!(report["separated"], true);
    let lambda = report["lambda_star"].as_f64().unwrap();
    assert!((lambda - 1e-6).abs() < 1e-12, "lambda* {lambda}");
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("DETECTED"));
}

#[test]
fn fit_rejects_bad_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "outcome,x\n1,2\n0\n").unwrap();
    let output = bin()
        .args(["fit", "--data", data.to_str().unwrap(), "--outcome", "outcome", "--method", "FC"])
        .output()
        .unwrap();
    assert!(!output.status.success());

    // Non-binary outcome.
    std::fs::write(&data, "outcome,x\n0.5,2\n0,1\n").unwrap();
    let output = bin()
        .args(["fit", "--data", data.to_str().unwrap(), "--outcome", "outcome", "--method", "FC"])
        .output()
        .unwrap();
    assert!(!output.status.success());

    // Constant covariate under a ridge method.
    std::fs::write(&data, "outcome,x\n0,2\n1,2\n0,2\n1,2\n").unwrap();
    let output = bin()
        .args(["fit", "--data", data.to_str().unwrap(), "--outcome", "outcome", "--method", "IP"])
        .output()
        .unwrap();
    assert!(!output.status.success());

    // Oracles need simulation truth.
    write_dataset2_csv(&data);
    let output = bin()
        .args(["fit", "--data", data.to_str().unwrap(), "--outcome", "outcome", "--method", "OEX"])
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn fit_prior_override() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    write_dataset2_csv(&data);
    let json_out = dir.path().join("fit.json");
    let output = bin()
        .args([
            "fit", "--data", data.to_str().unwrap(), "--outcome", "outcome", "--method", "IP",
            "--prior-or", "4.0", "--json-out", json_out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    let lambda = report["lambda_star"].as_f64().unwrap();
    assert!((lambda - 2.0).abs() < 0.01, "prior-derived lambda {lambda}");

    // --lambda with a tuned method is rejected.
    let output = bin()
        .args([
            "fit", "--data", data.to_str().unwrap(), "--outcome", "outcome", "--method", "D",
            "--lambda", "3.0",
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
}

#[test]
fn simulate_config_file_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = serde_json::json!({
        "master_seed": 5,
        "reps": 2,
        "methods": ["FC", "IP"],
        "scenarios": [{"n": 100, "k": 2, "a": 1.0, "ey": 0.25, "noise": false}],
        "out_dir": out,
        "workers": 1
    });
    let config_path = dir.path().join("config.json");
    std::fs::write(&config_path, config.to_string()).unwrap();
    let output = bin()
        .args(["simulate", "--config", config_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");

    // Exact record column order.
    let records = std::fs::read_to_string(out.join("records_ey0.25_a1.0_K2_N100_noise0.csv")).unwrap();
    assert!(records.starts_with(
        "scenario_id,replicate,method,lambda_star,boundary_hit,separated,converged,beta0,beta1,beta2,slope,cindex,rmse_pred_contrib,flags"
    ));

    let report_dir = dir.path().join("tables");
    let output = bin()
        .args([
            "report",
            "--in",
            out.to_str().unwrap(),
            "--out",
            report_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    assert!(report_dir.join("rmse_beta1.csv").exists());
}

#[test]
fn simulate_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{"master_seed": 1, "repz": 10, "out_dir": "/tmp/x"}"#,
    )
    .unwrap();
    let output = bin()
        .args(["simulate", "--config", config_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("repz") || err.contains("unknown field"), "{err}");
}

#[test]
fn illustrate_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let output = bin()
        .args([
            "illustrate",
            "--seed",
            "9",
            "--reps",
            "25",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    for file in [
        "table1.csv",
        "deviance_profile.csv",
        "deviance_components.csv",
        "replicates.csv",
        "lambda_hist.csv",
        "summary.json",
    ] {
        assert!(dir.path().join(file).exists(), "{file} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["reps"], 25);
    assert_eq!(summary["table1"].as_array().unwrap().len(), 6);
}
