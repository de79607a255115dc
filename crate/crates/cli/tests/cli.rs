//! End-to-end checks of the command-line surface: exit codes, file
//! round-trips, and report shape.

use std::process::Command;

use kms_core::lab::{gen_field, EnsembleConfig, FieldKind, Scenario};
use kms_core::norms::lp_norm;
use kms_core::spectral::{kmsf, Grid};

fn kms() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kms"))
}

fn catalog() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../catalog.json")
}

#[test]
fn malformed_spec_exits_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"operator\": }").unwrap();
    let out = kms().args(["classify", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "{stderr}");
}

#[test]
fn unknown_scenario_exits_2() {
    let out = kms()
        .args(["verify", catalog(), "--scenario", "not-a-thing", "--grid", "16", "--count", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tr-Curl-3d"));
}

#[test]
fn unknown_flag_is_rejected() {
    let out = kms().args(["demo", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn assert_bound_controls_the_exit_code() {
    let base = [
        "verify", catalog(), "--scenario", "tr-Curl-3d", "--grid", "16", "--count", "4",
        "--seed", "3", "--maxfreq", "4",
    ];
    let relaxed = kms().args(base).args(["--assert-bound", "1e9"]).output().unwrap();
    assert_eq!(relaxed.status.code(), Some(0), "{}", String::from_utf8_lossy(&relaxed.stderr));
    let strict = kms().args(base).args(["--assert-bound", "1e-9"]).output().unwrap();
    assert_eq!(strict.status.code(), Some(3));
    // The report is still written before exiting 3.
    assert!(String::from_utf8_lossy(&strict.stdout).contains("\"bound_exceeded\":true"));
}

#[test]
fn project_absorbs_the_divergence_free_witness() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("witness.kmsf");
    let output = dir.path().join("corrected.kmsf");

    let grid = Grid::standard(3, 16).unwrap();
    let scenario = Scenario::preset("tr-Curl-3d").unwrap();
    let cfg = EnsembleConfig::new(1, 4, 9, FieldKind::DivFreeGradient);
    let field = gen_field(&scenario, &grid, &cfg, 0).unwrap();
    kmsf::save_kmsf(&input, &field).unwrap();

    let out = kms()
        .args([
            "project",
            "presets:tr,matrix_curl3",
            input.to_str().unwrap(),
            "-o",
            output.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let corrected = kmsf::load_kmsf(&output).unwrap();
    assert!(lp_norm(&corrected, 2.0) <= 1e-8 * lp_norm(&field, 2.0));
}

#[test]
fn project_rejects_shape_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("wrong.kmsf");
    let grid = Grid::standard(3, 16).unwrap();
    kmsf::save_kmsf(&input, &kms_core::spectral::Field::zeros(grid, 3)).unwrap();
    let out = kms()
        .args([
            "project",
            "presets:tr,matrix_curl3",
            input.to_str().unwrap(),
            "-o",
            dir.path().join("out.kmsf").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn search_writes_a_witness_field() {
    let dir = tempfile::tempdir().unwrap();
    let witness = dir.path().join("best.kmsf");
    let out = kms()
        .args([
            "search", catalog(), "--scenario", "tr-Curl-3d", "--grid", "16", "--iters", "3",
            "--seed", "5", "--maxfreq", "4", "--witness", witness.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let field = kmsf::load_kmsf(&witness).unwrap();
    assert_eq!(field.dim_v(), 9);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"best_ratio\""));
}

#[test]
fn classify_report_carries_seed_and_tolerance() {
    let out = kms()
        .args(["classify", "presets:matrix_curl3", "--seed", "4", "--extra", "16"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let value: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(value["seed"], 4);
    assert!(value["tol"].as_f64().unwrap() > 0.0);
    assert_eq!(value["plain"]["rank"], 6);
    assert!(value["reduced"].is_null());
    // No NaN anywhere in canonical output.
    assert!(!stdout.contains("NaN") && !stdout.contains("null e"));
}

#[test]
fn lemma_mode_uses_the_q_flag() {
    let out = kms()
        .args([
            "verify", catalog(), "--scenario", "curl-only-3d", "--lemma", "--q", "2",
            "--grid", "16", "--count", "6", "--seed", "2", "--maxfreq", "4",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    // The q = 2 kernel projection bound: max ratio stays at 1.
    let max_ratio = value["estimate"]["max_ratio"].as_f64().unwrap();
    assert!(max_ratio <= 1.0 + 1e-6, "max ratio {max_ratio}");
}

#[test]
fn demo_text_format_renders() {
    let out = kms().args(["demo", "--grid", "16", "--format", "text"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("uncorrected"));
}
