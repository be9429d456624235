use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const HEADER: &str =
    "time_of_day,outdoor_temp_c,solar_kwh,baseline_kwh,tou_rate,tou_high,occupancy,ghg_rate";

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn hems(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hems"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

fn run_reference(out: &Path, extra: &[&str]) -> Output {
    let config = scenarios().join("reference.json");
    let mut args = vec![
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    hems(&args)
}

#[test]
fn run_writes_all_outputs() {
    let dir = TempDir::new().unwrap();
    let out = run_reference(dir.path(), &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 25);
    assert!(trace.starts_with("step,day,hour,tou_high,"));
    let efe = std::fs::read_to_string(dir.path().join("efe.csv")).unwrap();
    assert_eq!(efe.lines().count(), 49);
    assert!(efe.starts_with("step,day,hour,agent,neg_g_min,neg_g_mean,neg_g_max,neg_g_selected,"));
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["steps"], 24);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| !["trace.csv", "efe.csv", "metrics.json"].contains(&n.as_str()))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(run_reference(a.path(), &["--seed", "3"]).status.success());
    assert!(run_reference(b.path(), &["--seed", "3"]).status.success());
    for f in ["trace.csv", "efe.csv", "metrics.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn flags_override_the_config() {
    let dir = TempDir::new().unwrap();
    let out = run_reference(dir.path(), &["--days", "1", "--horizon", "2"]);
    assert!(out.status.success());
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 13);
    let row = trace.lines().nth(1).unwrap();
    assert_eq!(row.matches(';').count(), 1, "two-step HVAC message: {row}");
}

#[test]
fn validate_reports_policy_count() {
    let config = scenarios().join("reference.json");
    let out = hems(&["validate", "--config", config.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("729 policies"));
}

#[test]
fn config_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let csv = scenarios().join("reference.csv");
    let config = write_config(
        dir.path(),
        &format!(
            r#"{{"input": {:?}, "thermo": {{"alpha": 2.0}}}}"#,
            csv.to_str().unwrap()
        ),
    );
    let out = hems(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("thermo.alpha"));

    let out = hems(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));

    let config = scenarios().join("reference.json");
    let out = hems(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--horizon",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));

    let out = hems(&["run"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_2_without_outputs() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, format!("{HEADER}\n0,12,0,0.5,0.15,0,1,0.3\n")).unwrap();
    let config = write_config(dir.path(), r#"{"input": "bad.csv", "output_dir": "out"}"#);
    let out = hems(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.csv"));
    assert!(!dir.path().join("out").exists());

    std::fs::write(&data, "wrong,header\n").unwrap();
    let out = hems(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = run_reference(&blocker.join("sub"), &["--days", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_writes_one_directory_per_horizon() {
    let dir = TempDir::new().unwrap();
    let config = scenarios().join("three_hour_tou.json");
    let out = hems(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--horizons",
        "4,6",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for h in ["h4", "h6"] {
        assert!(dir.path().join(h).join("trace.csv").is_file());
    }
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("sweep_summary.json")).unwrap())
            .unwrap();
    let long = summary[1]["discharge_high_tou"].as_u64().unwrap();
    let short = summary[0]["discharge_high_tou"].as_u64().unwrap();
    assert_eq!(summary[1]["horizon"], 6);
    assert!(short < long);
}
