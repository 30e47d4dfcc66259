//! Command-line front end: single runs, directory sweeps and metric recomputation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::io::{
    read_trajectory_csv, recompute_metrics, write_logs, write_metrics_csv, SummaryFile,
};
use crate::metrics::Termination;
use crate::scenario::{load_scenario, Scenario};
use crate::simulator::run;

/// Columns of the sweep's `table.csv`.
pub const TABLE_HEADER: [&str; 8] = [
    "scenario",
    "n",
    "d",
    "alpha",
    "avg_error_m",
    "min_distance_m",
    "avg_consecutive_m",
    "status",
];

#[derive(Debug, Parser)]
#[command(name = "vee-swarm", version, about = "V-formation multi-UAV simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write trajectory.csv, metrics.csv and summary.json.
    Run(RunArgs),
    /// Simulate every `.scn` file in a directory and tabulate the summaries.
    Sweep(SweepArgs),
    /// Recompute metrics.csv from a stored trajectory.
    Metrics(MetricsArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory.
    #[arg(long, env = "VEE_SWARM_OUT")]
    pub out: PathBuf,
    /// Replaces `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scenario field override, e.g. `gains.k_r=2.0`; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Directory holding `.scn` files.
    #[arg(long)]
    pub scenarios: PathBuf,
    #[arg(long, env = "VEE_SWARM_OUT")]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Destination metrics CSV.
    #[arg(long)]
    pub out: PathBuf,
}

/// Entry point used by the binary.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Metrics(args) => cmd_metrics(&args),
    }
}

fn simulate(scenario: &Scenario<f64>, out: &Path) -> Result<SummaryFile<f64>> {
    let output = run(scenario).with_context(|| format!("simulating `{}`", scenario.name))?;
    let summary = SummaryFile::new(&output.summary, output.penetration, scenario);
    write_logs(&output.log, &output.series, &summary, out)?;
    Ok(summary)
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut overrides = args.overrides.clone();
    if let Some(seed) = args.seed {
        overrides.push(format!("sim.seed={seed}"));
    }
    let scenario = load_scenario::<f64>(&args.scenario, &overrides)
        .with_context(|| format!("loading {}", args.scenario.display()))?;
    let s = simulate(&scenario, &args.out)?;
    println!(
        "{}: {} after {} steps, avg_error={:.4} m, min_distance={:.4} m, avg_consecutive={:.4} m",
        s.name,
        s.termination,
        s.steps_used,
        s.avg_error_mean,
        s.min_pairwise_overall,
        s.avg_consecutive_mean
    );
    if let Some(p) = s.penetration {
        bail!("UAV {} entered obstacle {}", p.uav, p.obstacle);
    }
    Ok(())
}

/// One line of `table.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario: String,
    pub result: std::result::Result<SummaryFile<f64>, String>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        match &self.result {
            Ok(s) => s.termination == Termination::ObstaclePenetration,
            Err(_) => true,
        }
    }

    fn record(&self) -> Vec<String> {
        let f = |x: f64| format!("{x:.16e}");
        match &self.result {
            Ok(s) => {
                let fm = &s.scenario.formation;
                vec![
                    self.scenario.clone(),
                    fm.n.to_string(),
                    f(fm.d),
                    f(fm.alpha),
                    f(s.avg_error_mean),
                    f(s.min_pairwise_overall),
                    f(s.avg_consecutive_mean),
                    s.termination.to_string(),
                ]
            }
            Err(msg) => {
                let mut r = vec![self.scenario.clone()];
                r.extend(std::iter::repeat_n(String::new(), 6));
                r.push(format!("error: {msg}"));
                r
            }
        }
    }
}

/// Sorted `.scn` files directly inside `dir`.
pub fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "scn") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Runs every scenario in `dir` on `jobs` workers; per-run logs go to `out/<stem>/`.
pub fn sweep(dir: &Path, out: &Path, jobs: Option<usize>) -> Result<Vec<SweepRow>> {
    let files = scenario_files(dir)?;
    if files.is_empty() {
        bail!("no .scn files in {}", dir.display());
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = jobs {
        if k == 0 {
            bail!("--jobs must be at least 1");
        }
        pool = pool.num_threads(k);
    }
    let pool = pool.build()?;
    let rows = pool.install(|| {
        files
            .par_iter()
            .map(|path| {
                let stem = path
                    .file_stem()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned();
                let result = load_scenario::<f64>(path, &[])
                    .map_err(anyhow::Error::from)
                    .and_then(|s| simulate(&s, &out.join(&stem)))
                    .map_err(|e| format!("{e:#}"));
                SweepRow {
                    scenario: stem,
                    result,
                }
            })
            .collect::<Vec<_>>()
    });
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let table = out.join("table.csv");
    let mut w =
        csv::Writer::from_path(&table).with_context(|| format!("writing {}", table.display()))?;
    w.write_record(TABLE_HEADER)?;
    for row in &rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(rows)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let rows = sweep(&args.scenarios, &args.out, args.jobs)?;
    let failed: Vec<&str> = rows
        .iter()
        .filter(|r| r.failed())
        .map(|r| r.scenario.as_str())
        .collect();
    for row in &rows {
        let status = match &row.result {
            Ok(s) => s.termination.to_string(),
            Err(msg) => format!("error: {msg}"),
        };
        println!("{}: {status}", row.scenario);
    }
    if !failed.is_empty() {
        bail!(
            "{} of {} scenarios failed: {}",
            failed.len(),
            rows.len(),
            failed.join(", ")
        );
    }
    Ok(())
}

pub fn cmd_metrics(args: &MetricsArgs) -> Result<()> {
    let scenario = load_scenario::<f64>(&args.scenario, &[])
        .with_context(|| format!("loading {}", args.scenario.display()))?;
    let log = read_trajectory_csv(&args.trajectory)?;
    let series = recompute_metrics(&log, &scenario)
        .map_err(anyhow::Error::msg)
        .with_context(|| format!("recomputing from {}", args.trajectory.display()))?;
    write_metrics_csv(&series, &args.out)?;
    Ok(())
}
