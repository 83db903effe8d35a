//! End-to-end checks of the command-line surface: exit codes, output
//! shapes, and determinism.

mod common;

use common::{fig_config, run, stderr_of, TempDir};
use serde_json::{json, Value};

fn reference_config(noise: Value, estimator: &str, extra: &[(&str, Value)]) -> String {
    let bins: Vec<usize> = (5..=61).chain(66..=122).collect();
    let mut doc = json!({
        "array": {"kind": "uca", "m": 16, "radius_lambda": 1.5},
        "grid": {
            "carrier_hz": 5.32e9,
            "spacing_hz": 312500.0,
            "total_bins": 128,
            "active_bins": bins,
        },
        "paths": [
            {"theta_deg": 30.0, "tau_ns": 50.0, "beta_re": 1.0, "beta_im": 0.0},
            {"theta_deg": 40.0, "tau_ns": 100.0, "beta_abs": 0.9, "random_phase": true},
        ],
        "noise": noise,
        "estimator": {"kind": estimator},
        "seed": 1,
    });
    for (key, value) in extra {
        doc[*key] = value.clone();
    }
    serde_json::to_string_pretty(&doc).unwrap()
}

#[test]
fn simulate_writes_reference_shape_and_is_deterministic() {
    let dir = TempDir::new("simshape");
    let config = dir.write("config.json", &reference_config(json!({"sigma2": 0.0}), "aml", &[]));
    let out_a = dir.path("a.csv");
    let out_b = dir.path("b.csv");

    let run_a = run(&["simulate", "--config", config.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    assert!(run_a.status.success(), "{}", stderr_of(&run_a));
    let run_b = run(&["simulate", "--config", config.to_str().unwrap(), "--out", out_b.to_str().unwrap()]);
    assert!(run_b.status.success());

    let text = std::fs::read_to_string(&out_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2 + 16, "header, bins, then one row per sensor");
    assert!(lines[0].starts_with("16,128,"));
    assert_eq!(lines[1].split(',').count(), 114);
    for row in &lines[2..] {
        assert_eq!(row.split(',').count(), 114);
    }
    assert_eq!(std::fs::read(&out_a).unwrap(), std::fs::read(&out_b).unwrap());
}

#[test]
fn simulate_rejects_zero_paths() {
    let dir = TempDir::new("zeropaths");
    let bins: Vec<usize> = (0..8).collect();
    let config = dir.write(
        "config.json",
        &json!({
            "array": {"kind": "uca", "m": 4, "radius_lambda": 0.5},
            "grid": {"carrier_hz": 5.32e9, "spacing_hz": 312500.0, "total_bins": 8, "active_bins": bins},
            "paths": [],
        })
        .to_string(),
    );
    let out = run(&["simulate", "--config", config.to_str().unwrap(), "--out", dir.path("x.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("path"), "{}", stderr_of(&out));
}

#[test]
fn estimate_mismatched_sensor_count_exits_2() {
    let dir = TempDir::new("mismatch");
    let config16 = dir.write("c16.json", &reference_config(json!({"sigma2": 0.0}), "aml", &[]));
    let csi = dir.path("snap.csv");
    let sim = run(&["simulate", "--config", config16.to_str().unwrap(), "--out", csi.to_str().unwrap()]);
    assert!(sim.status.success());

    let mut eight = reference_config(json!({"sigma2": 0.0}), "aml", &[]);
    eight = eight.replace("\"m\": 16", "\"m\": 8");
    let config8 = dir.write("c8.json", &eight);
    let out = run(&["estimate", "--config", config8.to_str().unwrap(), "--csi", csi.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    let msg = stderr_of(&out);
    assert!(msg.contains("16") && msg.contains("8"), "diagnostic lacks dimensions: {msg}");
}

#[test]
fn estimate_both_emits_two_labeled_blocks() {
    let dir = TempDir::new("both");
    let config = dir.write("config.json", &reference_config(json!({"sigma2": 0.0}), "both", &[]));
    let csi = dir.path("snap.csv");
    let sim = run(&["simulate", "--config", config.to_str().unwrap(), "--out", csi.to_str().unwrap()]);
    assert!(sim.status.success());

    let out = run(&["estimate", "--config", config.to_str().unwrap(), "--csi", csi.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let aml = doc.get("aml").expect("aml block");
    let doa = doc.get("doa_only").expect("doa_only block");

    let thetas: Vec<f64> = aml["theta_deg"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let taus: Vec<f64> = aml["tau_ns"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let mut sorted = thetas.clone();
    sorted.sort_by(f64::total_cmp);
    assert!((sorted[0] - 30.0).abs() < 0.01 && (sorted[1] - 40.0).abs() < 0.01, "{thetas:?}");
    let mut taus_sorted = taus.clone();
    taus_sorted.sort_by(f64::total_cmp);
    assert!((taus_sorted[0] - 50.0).abs() < 0.01 && (taus_sorted[1] - 100.0).abs() < 0.01, "{taus:?}");
    assert!(doa["theta_deg"].as_array().unwrap().len() == 2);
}

#[test]
fn estimate_degenerate_delay_structure_exits_4() {
    let dir = TempDir::new("degenerate");
    let config = dir.write(
        "config.json",
        &json!({
            "array": {"kind": "uca", "m": 4, "radius_lambda": 0.5},
            "grid": {"carrier_hz": 5.32e9, "spacing_hz": 312500.0, "total_bins": 1, "active_bins": [0]},
            "paths": [
                {"theta_deg": 10.0, "tau_ns": 50.0, "beta_re": 1.0, "beta_im": 0.0},
                {"theta_deg": 80.0, "tau_ns": 100.0, "beta_re": 1.0, "beta_im": 0.0},
            ],
            "estimator": {"kind": "aml"},
        })
        .to_string(),
    );
    let csi = dir.path("snap.csv");
    let sim = run(&["simulate", "--config", config.to_str().unwrap(), "--out", csi.to_str().unwrap()]);
    assert!(sim.status.success(), "{}", stderr_of(&sim));
    let out = run(&["estimate", "--config", config.to_str().unwrap(), "--csi", csi.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr_of(&out));
}

#[test]
fn crb_single_path_bounds_agree() {
    let dir = TempDir::new("crbl1");
    let bins: Vec<usize> = (0..16).collect();
    let config = dir.write(
        "config.json",
        &json!({
            "array": {"kind": "uca", "m": 8, "radius_lambda": 1.0},
            "grid": {"carrier_hz": 5.32e9, "spacing_hz": 312500.0, "total_bins": 16, "active_bins": bins},
            "paths": [{"theta_deg": 25.0, "tau_ns": 40.0, "beta_re": 1.0, "beta_im": 0.0}],
            "noise": {"snr_db": 15.0},
        })
        .to_string(),
    );
    let out = run(&["crb", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let joint = doc["sqrt_crb_theta_joint_deg"][0].as_f64().unwrap();
    let only = doc["sqrt_crb_theta_only_deg"][0].as_f64().unwrap();
    assert!((joint - only).abs() <= 1e-10 * joint, "joint {joint} vs only {only}");
    let lambda = doc["lambda_min_bound_gap_rad2"].as_f64().unwrap();
    let scale = doc["crb_theta_only_rad2"][0][0].as_f64().unwrap();
    assert!(lambda.abs() <= 1e-10 * scale);
}

#[test]
fn crb_equal_delays_close_the_gap() {
    let dir = TempDir::new("crbeq");
    let bins: Vec<usize> = (0..16).collect();
    let config = dir.write(
        "config.json",
        &json!({
            "array": {"kind": "uca", "m": 8, "radius_lambda": 1.0},
            "grid": {"carrier_hz": 5.32e9, "spacing_hz": 312500.0, "total_bins": 16, "active_bins": bins},
            "paths": [
                {"theta_deg": 20.0, "tau_ns": 60.0, "beta_re": 1.0, "beta_im": 0.0},
                {"theta_deg": 55.0, "tau_ns": 60.0, "beta_re": 0.8, "beta_im": 0.2},
            ],
            "noise": {"sigma2": 0.01},
        })
        .to_string(),
    );
    let out = run(&["crb", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let lambda = doc["lambda_min_bound_gap_rad2"].as_f64().unwrap();
    let trace = doc["crb_theta_only_rad2"][0][0].as_f64().unwrap()
        + doc["crb_theta_only_rad2"][1][1].as_f64().unwrap();
    assert!(lambda.abs() <= 1e-10 * trace, "gap {lambda} vs trace {trace}");
}

#[test]
fn crb_reference_scene_orders_the_bounds() {
    let out = run(&["crb", "--config", fig_config("fig1.json").to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let lambda = doc["lambda_min_bound_gap_rad2"].as_f64().unwrap();
    let trace = doc["crb_theta_only_rad2"][0][0].as_f64().unwrap()
        + doc["crb_theta_only_rad2"][1][1].as_f64().unwrap();
    assert!(lambda >= -1e-10 * trace, "gap {lambda}");
}

#[test]
fn sweep_row_count_and_byte_identical_rerun() {
    let dir = TempDir::new("sweeprerun");
    let bins: Vec<usize> = (0..16).collect();
    let config = dir.write(
        "config.json",
        &json!({
            "array": {"kind": "uca", "m": 8, "radius_lambda": 1.0},
            "grid": {"carrier_hz": 5.32e9, "spacing_hz": 5e6, "total_bins": 16, "active_bins": bins},
            "paths": [
                {"theta_deg": 30.0, "tau_ns": 40.0, "beta_re": 1.0, "beta_im": 0.0},
                {"theta_deg": 60.0, "tau_ns": 90.0, "beta_abs": 0.9, "random_phase": true},
            ],
            "noise": {"snr_db": 20.0},
            "estimator": {"kind": "both"},
            "sweep": {"variable": "snr_db", "values": [10.0, 20.0, 30.0]},
            "trials": 2,
            "seed": 7,
        })
        .to_string(),
    );
    let out_a = dir.path("a.csv");
    let out_b = dir.path("b.csv");
    let run_a = run(&["sweep", "--config", config.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    assert!(run_a.status.success(), "{}", stderr_of(&run_a));
    let run_b = run(&["sweep", "--config", config.to_str().unwrap(), "--out", out_b.to_str().unwrap()]);
    assert!(run_b.status.success());

    let text = std::fs::read_to_string(&out_a).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 3);
    assert_eq!(
        lines[0],
        "swept_value,rmse_doa_deg_aml,rmse_td_ns_aml,rmse_doa_deg_only,sqrt_crb_doa_joint_deg,sqrt_crb_doa_only_deg,sqrt_crb_td_joint_ns,failures"
    );
    assert_eq!(std::fs::read(&out_a).unwrap(), std::fs::read(&out_b).unwrap());
    assert!(!stderr_of(&run_a).is_empty(), "progress goes to standard error");
}

#[test]
fn sweep_delta_theta_config_reports_both_estimators() {
    let dir = TempDir::new("sweepfig2");
    let out_csv = dir.path("fig2.csv");
    let out = run(&[
        "sweep",
        "--config",
        fig_config("fig2.json").to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
        "--trials",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let text = std::fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 6);
    assert!(lines[0].contains("rmse_doa_deg_aml") && lines[0].contains("rmse_doa_deg_only"));
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_ne!(fields[1], "NaN", "AML column populated");
        assert_ne!(fields[3], "NaN", "baseline column populated");
    }
}

#[test]
fn malformed_config_names_offending_key_path() {
    let dir = TempDir::new("badkey");
    let bins: Vec<usize> = (0..8).collect();
    let config = dir.write(
        "config.json",
        &json!({
            "array": {"kind": "uca", "m": 4, "radius_lambda": 0.5},
            "grid": {"carrier_hz": 5.32e9, "spacing_hz": 312500.0, "total_bins": 8, "active_bins": bins},
            "paths": [
                {"theta_deg": 10.0, "tau_ns": 5.0, "beta_re": 1.0, "beta_im": 0.0, "bogus": 1.0},
            ],
        })
        .to_string(),
    );
    let out = run(&["crb", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("paths[0]"), "{}", stderr_of(&out));

    let garbage = dir.write("garbage.json", "not json at all {");
    let out = run(&["crb", "--config", garbage.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn missing_config_file_exits_3_and_names_the_path() {
    let out = run(&["crb", "--config", "/nonexistent/jade/config.json"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("/nonexistent/jade/config.json"),
        "diagnostic lacks the path: {}",
        stderr_of(&out)
    );
}

#[cfg(unix)]
#[test]
fn early_closed_stdout_pipe_is_not_a_panic() {
    use std::io::Read;
    use std::os::unix::process::ExitStatusExt;
    use std::process::{Command, Stdio};

    // A reader like `head` may close the pipe before the JSON is written; the
    // process must finish or die on SIGPIPE, never panic with a backtrace.
    let mut child = Command::new(common::bin())
        .args(["crb", "--config", fig_config("fig1.json").to_str().unwrap()])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    drop(child.stdout.take());
    let status = child.wait().unwrap();
    let mut err = String::new();
    child.stderr.take().unwrap().read_to_string(&mut err).unwrap();
    assert!(!err.contains("panicked"), "{err}");
    assert!(status.success() || status.signal() == Some(13), "{status:?}");
}
