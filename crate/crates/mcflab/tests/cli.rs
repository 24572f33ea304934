//! End-to-end tests of the command-line binary: exit codes, output schemas,
//! and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mcflab")
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn run_with_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(bin()).args(args).env(key, value).output().unwrap()
}

fn checksums(out_dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    doc["checksums"].clone()
}

#[test]
fn verify_linear_fixture_exits_zero_with_tiny_defects() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "verify.json",
        r#"{
            "spec": {"n": 2, "k": 1, "L": 4.0, "h": 0.25},
            "field": {"kind": "linear", "a": [[0.5, -0.25]]},
            "dlambda": [1.0, 1.5]
        }"#,
    );
    let out = dir.path().join("out");
    let result = run(&[
        "verify",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["C_K"].as_f64().unwrap() < 1e-10);
    assert!(summary["C_cauchy"].as_f64().unwrap() < 1e-10);
    assert_eq!(summary["C_star_ok"], serde_json::Value::Bool(true));
    let verify: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    for key in [
        "residual_sup_parametric",
        "residual_sup_scalar",
        "equivalence_defect",
        "divergence_pointwise_defect",
        "extension_defect_max",
    ] {
        let v = verify[key].as_f64().unwrap();
        assert!(v < 1e-10, "{key} = {v}");
    }
}

#[test]
fn missing_key_names_the_key_and_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{"spec": {"n": 2, "k": 1, "L": 1.0}, "field": {"kind": "zero"}}"#,
    );
    let out = dir.path().join("out");
    let result = run(&[
        "geometry",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("`h`"), "stderr does not name the missing key: {stderr}");
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        r#"{
            "spec": {"n": 2, "k": 1, "L": 1.0, "h": 0.25},
            "field": {"kind": "zero"},
            "surprise": 1
        }"#,
    );
    let out = dir.path().join("out");
    let result = run(&[
        "geometry",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn solver_divergence_exits_three_with_honest_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "solve.json",
        r#"{
            "spec": {"n": 2, "k": 1, "L": 1.0, "h": 0.125},
            "boundary": {"kind": "linear", "a": [[1.0, 0.5]]},
            "init": {"kind": "bump", "amp": 0.05, "width": 0.4},
            "solver": {"c_tau": 0.9}
        }"#,
    );
    let out = dir.path().join("out");
    let result = run(&[
        "solve-soliton",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(result.status.code(), Some(3));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], serde_json::Value::Bool(false));
    assert_eq!(report["diverged"], serde_json::Value::Bool(true));
    // partial outputs are still flushed with a manifest
    assert!(out.join("field.json").exists());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn solver_converges_and_field_file_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "solve.json",
        r#"{
            "spec": {"n": 2, "k": 1, "L": 1.0, "h": 0.125},
            "boundary": {"kind": "linear", "a": [[0.8, -0.5]]}
        }"#,
    );
    let out = dir.path().join("out");
    let result = run(&[
        "solve-soliton",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
    let text = std::fs::read_to_string(out.join("field.json")).unwrap();
    let field = mcflab::grid::GraphField::from_json(&text).unwrap();
    assert_eq!(field.to_json(), text);
}

#[test]
fn blowdown_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bd.json",
        r#"{"source": {"kind": "abs-plus-one"}, "n": 3, "sampling_count": 128}"#,
    );
    let mut sums = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let result = run(&[
            "blowdown",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "7",
            "--quiet",
        ]);
        assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
        sums.push(checksums(&out));
    }
    assert_eq!(sums[0], sums[1]);
    // different seed moves the stochastic sphere sampling
    let out = dir.path().join("c");
    let result = run(&[
        "blowdown",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "8",
        "--quiet",
    ]);
    assert_eq!(result.status.code(), Some(0));
    assert_ne!(sums[0]["profile.json"], checksums(&out)["profile.json"]);
}

#[test]
fn thread_count_does_not_change_output_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "solve.json",
        r#"{
            "spec": {"n": 2, "k": 1, "L": 1.0, "h": 0.125},
            "boundary": {"kind": "linear", "a": [[0.6, 0.3]]},
            "init": {"kind": "bump", "amp": 0.02, "width": 0.4}
        }"#,
    );
    let mut sums = Vec::new();
    for threads in ["1", "2"] {
        let out = dir.path().join(format!("t{threads}"));
        let result = run_with_env(
            &[
                "solve-soliton",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--quiet",
            ],
            "MCFLAB_THREADS",
            threads,
        );
        assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
        sums.push(checksums(&out)["field.json"].clone());
    }
    assert_eq!(sums[0], sums[1]);
}

#[test]
fn invalid_thread_env_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "g.json",
        r#"{"spec": {"n": 1, "k": 1, "L": 1.0, "h": 0.25}, "field": {"kind": "zero"}}"#,
    );
    let out = dir.path().join("out");
    let result = run_with_env(
        &[
            "geometry",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        "MCFLAB_THREADS",
        "many",
    );
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn geometry_and_estimates_headers_are_byte_exact() {
    let dir = tempfile::tempdir().unwrap();
    let geo_config = write_config(
        dir.path(),
        "g.json",
        r#"{"spec": {"n": 2, "k": 1, "L": 1.0, "h": 0.25},
            "field": {"kind": "linear", "a": [[1.0, 0.0]]}}"#,
    );
    let out = dir.path().join("geo");
    let result = run(&[
        "geometry",
        "--config",
        geo_config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(result.status.code(), Some(0));
    let csv = std::fs::read(out.join("geometry.csv")).unwrap();
    assert!(csv.starts_with(b"x0,x1,H_norm,F_perp_norm,residual_norm,det_g,lambda_min,lambda_max\n"));
    assert!(!csv.contains(&b'\r'));

    let bd_config = write_config(
        dir.path(),
        "bd.json",
        r#"{"source": {"kind": "abs-plus-one"}, "n": 2, "ladder": [1.0, 2.0, 4.0, 8.0]}"#,
    );
    let out = dir.path().join("bd");
    let result = run(&[
        "blowdown",
        "--config",
        bd_config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(result.status.code(), Some(0));
    let csv = std::fs::read(out.join("estimates.csv")).unwrap();
    assert!(csv.starts_with(b"check,param,lhs,rhs,ratio\n"));
}

#[test]
fn run_flow_emits_snapshots_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "flow.json",
        r#"{
            "spec": {"n": 1, "k": 1, "L": 2.0, "h": 0.0625},
            "initial": {"kind": "bump", "amp": 0.2, "width": 0.5},
            "flow": {"c": 0.2, "t_end": 0.05, "snapshots": [0.0, 0.025]},
            "mode": "plain"
        }"#,
    );
    let out = dir.path().join("out");
    let result = run(&[
        "run-flow",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
    for name in ["snapshot_000.json", "snapshot_001.json", "snapshot_002.json", "run.csv"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let csv = std::fs::read_to_string(out.join("run.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,sup_grad,sup_rhs");
    assert_eq!(lines.count(), 3);
    // snapshots parse back as field files
    let text = std::fs::read_to_string(out.join("snapshot_002.json")).unwrap();
    mcflab::grid::GraphField::from_json(&text).unwrap();
}

#[test]
fn manifest_echoes_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "g.json",
        r#"{"spec": {"n": 1, "k": 1, "L": 1.0, "h": 0.25}, "field": {"kind": "zero"}}"#,
    );
    let out = dir.path().join("out");
    let result = run(&[
        "geometry",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "99",
        "--quiet",
    ]);
    assert_eq!(result.status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], serde_json::json!(99));
    assert_eq!(manifest["command"], serde_json::json!("geometry"));
    assert_eq!(manifest["config"]["spec"]["h"], serde_json::json!(0.25));
    assert!(manifest["checksums"]["geometry.csv"].is_string());
}
