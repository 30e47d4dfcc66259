//! Log writing, reading and scenario text round trips.

use std::f64::consts::PI;
use std::path::PathBuf;

use vee_swarm::geometry::Obstacle;
use vee_swarm::io::{
    read_metrics_csv, read_summary_json, read_trajectory_csv, recompute_metrics, write_logs,
    write_metrics_csv, write_trajectory_csv, SummaryFile,
};
use vee_swarm::scenario::{load_scenario, parse_scenario, Scenario};
use vee_swarm::simulator::run;

fn scenario_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(rel)
}

fn short_run(overrides: &[&str]) -> Scenario<f64> {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    load_scenario(&scenario_path("narrow_passage.scn"), &overrides).unwrap()
}

#[test]
fn trajectory_has_one_row_per_uav_and_step() {
    let scenario = short_run(&["formation.n=2", "sim.max_steps=3"]);
    let out = run(&scenario).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = SummaryFile::new(&out.summary, out.penetration, &scenario);
    let paths = write_logs(&out.log, &out.series, &summary, dir.path()).unwrap();
    let text = std::fs::read_to_string(&paths.trajectory).unwrap();
    assert_eq!(text.lines().count(), 1 + 6);
    let metrics = std::fs::read_to_string(&paths.metrics).unwrap();
    assert_eq!(metrics.lines().count(), 1 + 3);
}

#[test]
fn reading_and_rewriting_logs_is_byte_identical() {
    let scenario = short_run(&["sim.max_steps=200"]);
    let out = run(&scenario).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = SummaryFile::new(&out.summary, out.penetration, &scenario);
    let paths = write_logs(&out.log, &out.series, &summary, dir.path()).unwrap();

    let again = dir.path().join("again.csv");
    write_trajectory_csv(&read_trajectory_csv(&paths.trajectory).unwrap(), &again).unwrap();
    assert_eq!(
        std::fs::read(&paths.trajectory).unwrap(),
        std::fs::read(&again).unwrap()
    );

    write_metrics_csv(&read_metrics_csv(&paths.metrics).unwrap(), &again).unwrap();
    assert_eq!(
        std::fs::read(&paths.metrics).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn summary_embeds_the_exact_scenario() {
    let scenario = short_run(&["sim.max_steps=50", "gains.k_r=2.5"]);
    let out = run(&scenario).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let summary = SummaryFile::new(&out.summary, out.penetration, &scenario);
    let paths = write_logs(&out.log, &out.series, &summary, dir.path()).unwrap();
    let back: SummaryFile<f64> = read_summary_json(&paths.summary).unwrap();
    assert_eq!(back, summary);
    assert_eq!(back.scenario, scenario);
}

#[test]
fn scenario_text_round_trips() {
    for rel in [
        "narrow_passage.scn",
        "open_field.scn",
        "table1/s1.scn",
        "table1/s2.scn",
        "table1/s3.scn",
        "table1/s4.scn",
        "table1/s5.scn",
    ] {
        let s: Scenario<f64> = load_scenario(&scenario_path(rel), &[]).unwrap();
        let back: Scenario<f64> = parse_scenario(&s.to_text(), &[]).unwrap();
        assert_eq!(back, s, "{rel}");
    }
}

#[test]
fn recomputed_metrics_match_the_run() {
    let scenario = short_run(&["sim.max_steps=400"]);
    let out = run(&scenario).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trajectory.csv");
    write_trajectory_csv(&out.log, &path).unwrap();
    let series = recompute_metrics(&read_trajectory_csv(&path).unwrap(), &scenario).unwrap();
    assert_eq!(series.rows.len(), out.series.rows.len());
    for (a, b) in series.rows.iter().zip(&out.series.rows) {
        assert_eq!((a.step, a.n_reconfig_active), (b.step, b.n_reconfig_active));
        for (x, y) in [
            (a.time, b.time),
            (a.phi, b.phi),
            (a.avg_error, b.avg_error),
            (a.min_pairwise, b.min_pairwise),
            (a.avg_consecutive, b.avg_consecutive),
        ] {
            assert!((x - y).abs() <= 1e-9, "step {}: {x} vs {y}", a.step);
        }
    }
}

#[test]
fn shipped_passage_scenario_loads() {
    let s: Scenario<f64> = load_scenario(&scenario_path("narrow_passage.scn"), &[]).unwrap();
    assert_eq!(s.formation.n, 5);
    assert_eq!(s.formation.d, 0.8);
    assert!((s.formation.alpha - 3.0 * PI / 4.0).abs() < 1e-15);
    assert_eq!(s.obstacles.len(), 2);
    assert!(s
        .obstacles
        .iter()
        .all(|o| matches!(o, Obstacle::ConvexPolygon { vertices } if vertices.len() == 4)));
}

#[test]
fn bad_override_is_rejected() {
    let path = scenario_path("narrow_passage.scn");
    assert!(load_scenario::<f64>(&path, &["formation.alpha=0.2".into()]).is_err());
    assert!(load_scenario::<f64>(&path, &["no_such.key=1".into()]).is_err());
    assert!(load_scenario::<f64>(&path, &["missing_equals".into()]).is_err());
}
