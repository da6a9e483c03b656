//! End-to-end checks of the `officesim` binary: subcommands, exit codes, and
//! byte-identical outputs.

use std::path::Path;
use std::process::Command;

fn officesim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_officesim"))
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn validate_reports_totals() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    std::fs::write(&plan_path, officesim::plan::default_plan().to_json_string()).unwrap();

    let out = officesim()
        .args(["validate", "--plan"])
        .arg(&plan_path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("47 rooms, 239 lights, 180 computers, 213 users"),
        "{stdout}"
    );
}

#[test]
fn validate_rejects_bad_plans_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    std::fs::write(
        &plan_path,
        r#"{"rooms": [{"id": "c1", "kind": "corridor", "computers": 1}]}"#,
    )
    .unwrap();
    let out = officesim()
        .args(["validate", "--plan"])
        .arg(&plan_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("corridor"), "{stderr}");

    let missing = officesim()
        .args(["validate", "--plan", "does-not-exist.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn unknown_arguments_exit_1() {
    let out = officesim().args(["simulate", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = officesim()
        .args(["experiment", "--name", "nope"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_deterministic_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let scenario_path = dir.path().join("scenario.json");
    std::fs::write(&scenario_path, r#"{"horizon_days": 1, "seed": 5}"#).unwrap();

    let run = |out_dir: &Path| {
        let status = officesim()
            .args(["simulate", "--scenario"])
            .arg(&scenario_path)
            .args(["--days", "1", "--out"])
            .arg(out_dir)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    run(&out_a);
    run(&out_b);

    for name in [
        "meter.csv",
        "half_hourly.csv",
        "betas.csv",
        "events.csv",
        "summary.json",
    ] {
        let a = read(&out_a, name);
        assert!(!a.is_empty(), "{name} empty");
        assert_eq!(
            a,
            read(&out_b, name),
            "{name} differs between identical runs"
        );
    }

    // 1 day of minutes plus the header line.
    let meter = String::from_utf8(read(&out_a, "meter.csv")).unwrap();
    assert_eq!(meter.lines().count(), 1 + 1440);
    assert!(meter.starts_with("timestamp_min,total_w,base_w,lights_w,computers_w"));
}

#[test]
fn simulate_rejects_malformed_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let scenario_path = dir.path().join("scenario.json");
    std::fs::write(&scenario_path, r#"{"tick_minutes": 3}"#).unwrap();
    let out = officesim()
        .args(["simulate", "--scenario"])
        .arg(&scenario_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("tick_minutes"), "{stderr}");
}

#[test]
fn experiment_runs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    std::fs::write(
        &config_path,
        r#"{"scenario": {"horizon_days": 2, "seed": 3}, "n_reps": 2}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = officesim()
        .args(["experiment", "--name", "baseline_automated", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let exp_dir = out_dir.join("baseline_automated");
    for name in [
        "summary.json",
        "weekly_profile.csv",
        "daily_profile.csv",
        "totals.csv",
    ] {
        assert!(exp_dir.join(name).exists(), "{name} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&String::from_utf8(read(&exp_dir, "summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "baseline_automated");
    assert_eq!(summary["n_reps"], 2);
}
