//! End-to-end tests of the command-line interface: exit codes, config-file
//! handling, and report emission.

use std::path::Path;
use std::process::{Command, Output};

fn wcop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wcop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn diagnose_expected_instability_exits_zero() {
    let output = wcop(&["diagnose", "--scenario", "dilation-2"]);
    assert_eq!(output.status.code(), Some(0), "{}", stdout(&output));
    let text = stdout(&output);
    assert!(text.contains("stable_orbits"));
    assert!(text.contains("\"stable\":false"), "{text}");
}

#[test]
fn invariance_heat_swap_prints_residuals_and_exits_zero() {
    let output = wcop(&["invariance", "--scenario", "heat-swap"]);
    assert_eq!(output.status.code(), Some(0), "{}", stdout(&output));
    let text = stdout(&output);
    assert!(text.contains("rejected"), "{text}");
    assert!(text.contains("c_time"), "{text}");
}

#[test]
fn semigroup_command_on_stable_scenario() {
    let output = wcop(&["semigroup", "--scenario", "weighted-monomial-disk"]);
    assert_eq!(output.status.code(), Some(0), "{}", stdout(&output));
    let text = stdout(&output);
    assert!(text.contains("series certified"), "{text}");
    assert!(text.contains("semigroup law"), "{text}");
}

#[test]
fn semigroup_command_refuses_unstable_scenario() {
    let output = wcop(&["semigroup", "--scenario", "dilation-2"]);
    // Refusal is the expected outcome for a scenario declared unstable.
    assert_eq!(output.status.code(), Some(0), "{}", stdout(&output));
    assert!(stdout(&output).contains("refused"), "{}", stdout(&output));
}

#[test]
fn expansion_command_prints_table() {
    let output = wcop(&["expansion", "--alpha", "2"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("2 terms"), "{text}");
}

#[test]
fn usage_errors_exit_two() {
    let output = wcop(&["diagnose"]);
    assert_eq!(output.status.code(), Some(2), "{}", stdout(&output));
    let output = wcop(&["diagnose", "--scenario", "no-such-scenario"]);
    assert_eq!(output.status.code(), Some(2));
    let output = wcop(&["frobnicate"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn bad_config_file_exits_two_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, r#"{ "command": "catalog", "overrides": { "horizon": 1 } }"#).unwrap();
    let output = wcop(&["catalog", "--config", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("overrides.horizon"), "{err}");
}

#[test]
fn config_file_drives_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(
        &path,
        r#"{
            "command": "diagnose",
            "scenario_ref": "contraction-on-disk",
            "overrides": { "horizon": 64 }
        }"#,
    )
    .unwrap();
    let output = wcop(&["diagnose", "--config", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{}", stdout(&output));
    assert!(stdout(&output).contains("contraction-on-disk"));
}

#[test]
fn out_directory_receives_reports_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let output = wcop(&[
        "diagnose",
        "--scenario",
        "contraction-on-disk",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stdout(&output));
    let report = dir.path().join("report.json");
    assert!(report.exists());
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("\"schema_version\": 1"));
    // Timestamp lives in the sidecar, not the report.
    assert!(!text.contains("unix"));
    assert!(dir.path().join("report.meta.json").exists());
    let csv = dir.path().join("csv");
    assert!(csv.join("contraction-on-disk.growth.csv").exists());
    let grid_csv =
        std::fs::read_to_string(csv.join("contraction-on-disk.base_grid.csv")).unwrap();
    assert!(grid_csv.starts_with("x_0,x_1\n"), "{grid_csv}");
    assert!(csv.join("contraction-on-disk.iterates.csv").exists());
}

#[test]
fn format_flag_restricts_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let output = wcop(&[
        "diagnose",
        "--scenario",
        "zero-weight-disk",
        "--out",
        dir.path().to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stdout(&output));
    assert!(dir.path().join("report.json").exists());
    assert!(!dir.path().join("csv").exists());
}

#[test]
fn scenario_file_is_loadable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("custom.json");
    std::fs::write(
        &path,
        r#"{
            "name": "custom-contraction",
            "space": {
                "tag": "continuous",
                "domain": { "euclidean": { "dim": 1 } }
            },
            "weight": "1",
            "symbol": ["x0/3"],
            "test_fields": [ { "label": "x", "expr": "x0" } ],
            "expected": [
                {
                    "diagnostic": { "stable_orbits": { "stable": true } },
                    "provenance": "closed_form"
                }
            ],
            "assumption_flags": {
                "denseness_c": true,
                "dense_range_a": true,
                "kernel_b": true,
                "p_convex": true
            },
            "base_grid": { "box": { "lo": [-1.0], "hi": [1.0], "spacing": 0.25 } },
            "probe_grid": { "points": { "points": [[0.5]] } }
        }"#,
    )
    .unwrap();
    let output = wcop(&["diagnose", "--scenario", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(0), "{}", stdout(&output));
    assert!(stdout(&output).contains("custom-contraction"));
}

#[test]
fn grid_points_are_exported_with_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let output = wcop(&[
        "diagnose",
        "--scenario",
        "smooth-nonlinear-interval",
        "--out",
        dir.path().to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stdout(&output));
    let text = std::fs::read_to_string(
        dir.path()
            .join(Path::new("csv/smooth-nonlinear-interval.base_grid.csv")),
    )
    .unwrap();
    for line in text.lines().skip(1) {
        let v: f64 = line.parse().unwrap();
        assert!(v.abs() <= 0.9 + 1e-12);
        // Round-trip through the printed representation is exact.
        assert_eq!(format!("{v:.16e}").parse::<f64>().unwrap(), v);
    }
}
