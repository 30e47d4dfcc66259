//! Run artifacts: `trajectory.csv`, `metrics.csv` and `summary.json`.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! that every stored value reads back bit-exact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behaviors::BehaviorBreakdown;
use crate::formation::UavState;
use crate::geometry::Vec2;
use crate::metrics::{metrics_row, MetricsSeries, RunSummary, Termination, DEFAULT_EPS_ACT};
use crate::scalar::Scalar;
use crate::scenario::Scenario;
use crate::simulator::Penetration;

pub const TRAJECTORY_HEADER: [&str; 19] = [
    "step",
    "time_s",
    "uav_id",
    "x_m",
    "y_m",
    "vx_mps",
    "vy_mps",
    "psi_rad",
    "uf_x",
    "uf_y",
    "ug_x",
    "ug_y",
    "uo_x",
    "uo_y",
    "uc_x",
    "uc_y",
    "ur_x",
    "ur_y",
    "reconfig_active",
];

pub const METRICS_HEADER: [&str; 7] = [
    "step",
    "time_s",
    "phi",
    "avg_error_m",
    "min_pairwise_m",
    "avg_consecutive_m",
    "n_reconfig_active",
];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// One UAV at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow<T> {
    pub step: usize,
    pub time: T,
    pub uav: UavState<T>,
    pub breakdown: BehaviorBreakdown<T>,
}

impl<T: Scalar> TrajectoryRow<T> {
    pub fn new(step: usize, time: T, uav: &UavState<T>, breakdown: &BehaviorBreakdown<T>) -> Self {
        Self {
            step,
            time,
            uav: *uav,
            breakdown: *breakdown,
        }
    }
}

/// Rows ordered by `(step, uav_id)`, one per UAV per step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryLog<T> {
    pub rows: Vec<TrajectoryRow<T>>,
}

impl<T: Scalar> TrajectoryLog<T> {
    /// Rows grouped by step; assumes every step lists all `n` UAVs.
    pub fn steps(&self, n: usize) -> impl Iterator<Item = &[TrajectoryRow<T>]> {
        self.rows.chunks(n)
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SummaryFile<T> {
    pub name: String,
    pub seed: u64,
    pub termination: Termination,
    pub steps_used: usize,
    pub avg_error_mean: T,
    pub min_pairwise_overall: T,
    pub avg_consecutive_mean: T,
    pub penetration: Option<Penetration>,
    pub scenario: Scenario<T>,
}

impl<T: Scalar> SummaryFile<T> {
    pub fn new(
        summary: &RunSummary<T>,
        penetration: Option<Penetration>,
        scenario: &Scenario<T>,
    ) -> Self {
        Self {
            name: scenario.name.clone(),
            seed: scenario.sim.seed,
            termination: summary.termination,
            steps_used: summary.steps_used,
            avg_error_mean: summary.avg_error_mean,
            min_pairwise_overall: summary.min_pairwise_overall,
            avg_consecutive_mean: summary.avg_consecutive_mean,
            penetration,
            scenario: scenario.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogPaths {
    pub trajectory: PathBuf,
    pub metrics: PathBuf,
    pub summary: PathBuf,
}

fn fmt<T: Scalar>(x: T) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn write_trajectory_csv<T: Scalar>(log: &TrajectoryLog<T>, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    let mut body = String::with_capacity(log.rows.len() * 420);
    body.push_str(&TRAJECTORY_HEADER.join(","));
    body.push('\n');
    for r in &log.rows {
        let b = &r.breakdown;
        let fields = [
            r.step.to_string(),
            fmt(r.time),
            r.uav.id.to_string(),
            fmt(r.uav.position.x),
            fmt(r.uav.position.y),
            fmt(r.uav.velocity.x),
            fmt(r.uav.velocity.y),
            fmt(r.uav.heading),
            fmt(b.u_f.x),
            fmt(b.u_f.y),
            fmt(b.u_g.x),
            fmt(b.u_g.y),
            fmt(b.u_o.x),
            fmt(b.u_o.y),
            fmt(b.u_c.x),
            fmt(b.u_c.y),
            fmt(b.u_r.x),
            fmt(b.u_r.y),
            u8::from(b.reconfig_active).to_string(),
        ];
        body.push_str(&fields.join(","));
        body.push('\n');
    }
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_metrics_csv<T: Scalar>(series: &MetricsSeries<T>, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    let mut body = METRICS_HEADER.join(",");
    body.push('\n');
    for r in &series.rows {
        let fields = [
            r.step.to_string(),
            fmt(r.time),
            fmt(r.phi),
            fmt(r.avg_error),
            fmt(r.min_pairwise),
            fmt(r.avg_consecutive),
            r.n_reconfig_active.to_string(),
        ];
        body.push_str(&fields.join(","));
        body.push('\n');
    }
    w.write_all(body.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_summary_json<T: Scalar>(summary: &SummaryFile<T>, path: &Path) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, summary).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_summary_json<T: Scalar>(path: &Path) -> Result<SummaryFile<T>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(std::io::BufReader::new(file)).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the three run artifacts into `out_dir`, creating it if needed.
pub fn write_logs<T: Scalar>(
    log: &TrajectoryLog<T>,
    series: &MetricsSeries<T>,
    summary: &SummaryFile<T>,
    out_dir: &Path,
) -> Result<LogPaths, IoError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let paths = LogPaths {
        trajectory: out_dir.join("trajectory.csv"),
        metrics: out_dir.join("metrics.csv"),
        summary: out_dir.join("summary.json"),
    };
    write_trajectory_csv(log, &paths.trajectory)?;
    write_metrics_csv(series, &paths.metrics)?;
    write_summary_json(summary, &paths.summary)?;
    Ok(paths)
}

fn open_csv(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>, IoError> {
    let csv_err = |source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = reader.headers().map_err(csv_err)?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    Ok(reader)
}

fn field<V: std::str::FromStr>(
    record: &csv::StringRecord,
    k: usize,
    path: &Path,
    line: u64,
) -> Result<V, IoError> {
    record
        .get(k)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| IoError::Format {
            path: path.to_path_buf(),
            message: format!(
                "line {line}: bad `{}` field",
                TRAJECTORY_HEADER.get(k).unwrap_or(&"?")
            ),
        })
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryLog<f64>, IoError> {
    let mut reader = open_csv(path, &TRAJECTORY_HEADER)?;
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|source| IoError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = k as u64 + 2;
        let f = |i: usize| field::<f64>(&record, i, path, line);
        let v = |i: usize| -> Result<Vec2<f64>, IoError> { Ok(Vec2::new(f(i)?, f(i + 1)?)) };
        let active: u8 = field(&record, 18, path, line)?;
        let velocity = v(5)?;
        rows.push(TrajectoryRow {
            step: field(&record, 0, path, line)?,
            time: f(1)?,
            uav: UavState {
                id: field(&record, 2, path, line)?,
                position: v(3)?,
                velocity,
                heading: f(7)?,
            },
            breakdown: BehaviorBreakdown {
                u_f: v(8)?,
                u_g: v(10)?,
                u_o: v(12)?,
                u_c: v(14)?,
                u_r: v(16)?,
                u_total: velocity,
                reconfig_active: active != 0,
            },
        });
    }
    Ok(TrajectoryLog { rows })
}

pub fn read_metrics_csv(path: &Path) -> Result<MetricsSeries<f64>, IoError> {
    let mut reader = open_csv(path, &METRICS_HEADER)?;
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|source| IoError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = k as u64 + 2;
        let f = |i: usize| field::<f64>(&record, i, path, line);
        rows.push(crate::metrics::MetricsRow {
            step: field(&record, 0, path, line)?,
            time: f(1)?,
            phi: f(2)?,
            avg_error: f(3)?,
            min_pairwise: f(4)?,
            avg_consecutive: f(5)?,
            n_reconfig_active: field(&record, 6, path, line)?,
        });
    }
    Ok(MetricsSeries { rows })
}

/// Recomputes the metrics series from a stored trajectory.
pub fn recompute_metrics<T: Scalar>(
    log: &TrajectoryLog<T>,
    scenario: &Scenario<T>,
) -> Result<MetricsSeries<T>, String> {
    let n = scenario.formation.n;
    if !log.rows.len().is_multiple_of(n) {
        return Err(format!(
            "trajectory has {} rows, not a multiple of n = {n}",
            log.rows.len()
        ));
    }
    let eps_act = T::lit(DEFAULT_EPS_ACT);
    let mut rows = Vec::with_capacity(log.rows.len() / n);
    for chunk in log.steps(n) {
        let step = chunk[0].step;
        for (k, r) in chunk.iter().enumerate() {
            if r.step != step || r.uav.id != k + 1 {
                return Err(format!("rows out of order at step {step}"));
            }
        }
        let uavs: Vec<UavState<T>> = chunk.iter().map(|r| r.uav).collect();
        rows.push(metrics_row(
            step,
            chunk[0].time,
            &uavs,
            chunk.iter().map(|r| r.breakdown.u_r.norm()),
            &scenario.formation,
            eps_act,
        ));
    }
    Ok(MetricsSeries { rows })
}
