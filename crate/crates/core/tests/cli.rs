use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gallery(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("gallery").join(name)
}

fn lab(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_anosov-lab"));
    cmd.args(args).env_remove("ANOSOVLAB_BUDGET");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn exponent_of_parabolic_group() {
    let cfg = gallery("g1_parabolic.toml");
    let out = lab(&["exponent", "--config", cfg.to_str().unwrap(), "--format", "json"], &[]);
    let v = json_stdout(&out);
    let delta = v["metrics"]["delta"].as_f64().unwrap();
    assert!((delta - 0.5).abs() < 0.05, "{delta}");
}

#[test]
fn kappa_at_radius_zero_is_one_zero_row() {
    let cfg = gallery("g5_schottky_sl3.toml");
    let out = lab(&["kappa", "--config", cfg.to_str().unwrap(), "--radius", "0", "--format", "json"], &[]);
    let v = json_stdout(&out);
    let rows = v["tables"][0]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    let zeros = rows[0]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(Value::as_f64)
        .all(|x| x.abs() < 1e-12);
    assert!(zeros, "{:?}", rows[0]);
}

#[test]
fn invalid_config_exits_2_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "name = \"x\"\n[group]\nkind = \"free\"\n").unwrap();
    let out = lab(&["group", "--config", bad.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is JSON");
    assert_eq!(err["exit_code"], 2);
    assert!(err["message"].as_str().is_some_and(|m| !m.is_empty()));
}

#[test]
fn missing_config_file_exits_2() {
    let out = lab(&["group", "--config", "/nonexistent/config.toml"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_overrun_exits_4() {
    let cfg = gallery("g3_lattice.toml");
    let out = lab(&["group", "--config", cfg.to_str().unwrap()], &[("ANOSOVLAB_BUDGET", "50")]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["exit_code"], 4);
}

#[test]
fn csv_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = gallery("g2_cusped_schottky.toml");
    let out = lab(
        &["group", "--config", cfg.to_str().unwrap(), "--radius", "4", "--out", dir.path().to_str().unwrap(), "--format", "csv"],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.path().join("group_summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("ball_size,")), "{summary}");
    let spheres = std::fs::read_to_string(dir.path().join("group_spheres.csv")).unwrap();
    assert_eq!(spheres.lines().count(), 1 + 5);
}

#[test]
fn thread_count_does_not_change_output() {
    let cfg = gallery("g5_schottky_sl3.toml");
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = lab(
            &[
                "exponent",
                "--config",
                cfg.to_str().unwrap(),
                "--radius",
                "7",
                "--threads",
                threads,
                "--out",
                dir.path().to_str().unwrap(),
                "--format",
                "json",
            ],
            &[],
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(dir.path().join("exponent.json")).unwrap()
    };
    assert_eq!(run("1"), run("3"));
}
