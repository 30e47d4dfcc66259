//! End-to-end checks of the `vee-swarm` binary.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vee-swarm"));
    c.env_remove("VEE_SWARM_OUT");
    c
}

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_scenario(out: &Path, extra: &[&str]) {
    run_ok(
        bin()
            .args(["run", "--scenario"])
            .arg(scenarios().join("narrow_passage.scn"))
            .arg("--out")
            .arg(out)
            .args(extra),
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_scenario(&a, &[]);
    run_scenario(&b, &[]);
    for f in ["trajectory.csv", "metrics.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn metrics_command_reproduces_metrics_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    run_scenario(&run_dir, &["--override", "sim.max_steps=300"]);
    let again = dir.path().join("again.csv");
    run_ok(
        bin()
            .arg("metrics")
            .arg("--trajectory")
            .arg(run_dir.join("trajectory.csv"))
            .arg("--scenario")
            .arg(scenarios().join("narrow_passage.scn"))
            .arg("--out")
            .arg(&again),
    );
    assert_eq!(
        std::fs::read(run_dir.join("metrics.csv")).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn seed_and_overrides_reach_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(
        dir.path(),
        &[
            "--seed",
            "3",
            "--override",
            "gains.k_r=2.0",
            "--override",
            "sim.max_steps=20",
        ],
    );
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json["seed"], 3);
    assert_eq!(json["scenario"]["gains"]["k_r"], 2.0);
    assert_eq!(json["steps_used"], 20);
}

#[test]
fn output_directory_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        bin()
            .env("VEE_SWARM_OUT", dir.path())
            .args(["run", "--override", "sim.max_steps=5", "--scenario"])
            .arg(scenarios().join("narrow_passage.scn")),
    );
    assert!(dir.path().join("summary.json").is_file());
}

#[test]
fn missing_output_directory_is_a_usage_error() {
    let out = bin()
        .args(["run", "--scenario"])
        .arg(scenarios().join("narrow_passage.scn"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_tabulates_every_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = run_ok(
        bin()
            .args(["sweep", "--jobs", "2", "--scenarios"])
            .arg(scenarios().join("table1"))
            .arg("--out")
            .arg(dir.path()),
    );
    assert_eq!(stdout.lines().count(), 5);
    let mut reader = csv::Reader::from_path(dir.path().join("table.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, vee_swarm::cli::TABLE_HEADER);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(&row[0], format!("s{}", k + 1));
        assert_eq!(&row[7], "GoalReached");
        assert!(dir.path().join(&row[0]).join("trajectory.csv").is_file());
    }
}

#[test]
fn unknown_override_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--override", "gains.k_zz=1", "--scenario"])
        .arg(scenarios().join("narrow_passage.scn"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
