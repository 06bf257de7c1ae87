//! Multi-trial experiments: fan trials out over worker threads, aggregate the
//! per-cycle error and distance curves, and write CSV/JSON outputs.
//!
//! Output layout of one experiment in `<out>`:
//!
//! - `<policy>_rmse.csv`: `cycle,value,stderr`, RMSE of the source estimate.
//! - `<policy>_distance.csv`: `cycle,value,stderr`, mean true distance of the
//!   first robot to the source.
//! - `<policy>_manifest.json`: configuration echo, version, per-trial
//!   termination reasons and summary statistics.
//! - `trajectories/<policy>_trial<NNN>.csv` when trajectory dumps are enabled.
//!
//! Trials that end early are padded with their final value up to the cycle
//! cap before averaging. Everything except the optional wall time is a
//! deterministic function of the configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Result, SlassError};
use crate::policies::PolicyKind;
use crate::sim::{run_trial, Termination, TrialOutcome};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Environment variable that overrides the worker thread count.
pub const THREADS_ENV: &str = "SLASS_THREADS";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOptions {
    /// Worker threads; `0` means available parallelism.
    pub threads: usize,
    pub dump_trajectories: bool,
    /// Include wall time in the manifest (makes it non-reproducible).
    pub record_timing: bool,
}

/// Thread count from `SLASS_THREADS`, else `requested`, else available
/// parallelism.
pub fn resolve_threads(requested: Option<usize>) -> usize {
    let positive = |n: &usize| *n > 0;
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(positive)
        .or(requested.filter(positive))
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateMetrics {
    /// Per-cycle RMSE of the source estimate, length `max_cycles`.
    pub rmse: Vec<f64>,
    pub rmse_stderr: Vec<f64>,
    /// Per-cycle mean true distance of robot 1 to the source.
    pub mean_distance: Vec<f64>,
    pub distance_stderr: Vec<f64>,
    /// Fraction of trials in which every robot arrived.
    pub success_rate: f64,
    /// Mean cycle count over successful trials.
    pub mean_cycles_to_arrival: Option<f64>,
}

impl AggregateMetrics {
    pub fn final_rmse(&self) -> f64 {
        self.rmse.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_distance(&self) -> f64 {
        self.mean_distance.last().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: u64,
    pub termination: Termination,
    pub cycles: usize,
    pub final_source_error: f64,
    pub final_distance: f64,
    pub constraint_violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub policy: PolicyKind,
    pub cfg: ExperimentConfig,
    pub metrics: AggregateMetrics,
    pub trials: Vec<TrialSummary>,
    pub outcomes: Vec<TrialOutcome>,
    pub wall_time_s: f64,
}

impl ExperimentResult {
    pub fn constraint_violations(&self) -> usize {
        self.trials.iter().map(|t| t.constraint_violations).sum()
    }
}

/// Runs trials `0..cfg.num_trials` on `threads` workers. Results are ordered
/// by trial index regardless of scheduling.
pub fn run_trials(cfg: &ExperimentConfig, policy: PolicyKind, threads: usize) -> Vec<TrialOutcome> {
    let n = cfg.num_trials;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<TrialOutcome>>> = Mutex::new(vec![None; n]);
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, n.max(1)) {
            scope.spawn(|| loop {
                let t = next.fetch_add(1, Ordering::Relaxed);
                if t >= n {
                    break;
                }
                let outcome = run_trial(cfg, policy, t as u64);
                slots.lock().expect("no worker panicked")[t] = Some(outcome);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|o| o.expect("every trial ran"))
        .collect()
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregates clamped per-trial series in trial order.
pub fn aggregate(cfg: &ExperimentConfig, outcomes: &[TrialOutcome]) -> AggregateMetrics {
    let len = cfg.max_cycles;
    let errors: Vec<Vec<f64>> = outcomes.iter().map(|o| o.clamped_errors(len)).collect();
    let dists: Vec<Vec<f64>> = outcomes.iter().map(|o| o.clamped_distances(0, len)).collect();
    let mut m = AggregateMetrics {
        rmse: Vec::with_capacity(len),
        rmse_stderr: Vec::with_capacity(len),
        mean_distance: Vec::with_capacity(len),
        distance_stderr: Vec::with_capacity(len),
        success_rate: 0.0,
        mean_cycles_to_arrival: None,
    };
    let mut column = Vec::with_capacity(outcomes.len());
    for n in 0..len {
        column.clear();
        column.extend(errors.iter().map(|e| e[n] * e[n]));
        let (mse, mse_se) = mean_and_stderr(&column);
        let rmse = mse.sqrt();
        m.rmse.push(rmse);
        // delta method: se(sqrt(x)) = se(x) / (2 sqrt(x))
        m.rmse_stderr.push(if rmse > 0.0 { mse_se / (2.0 * rmse) } else { 0.0 });

        column.clear();
        column.extend(dists.iter().map(|d| d[n]));
        let (mean, se) = mean_and_stderr(&column);
        m.mean_distance.push(mean);
        m.distance_stderr.push(se);
    }
    let successes: Vec<usize> = outcomes
        .iter()
        .filter(|o| o.termination == Termination::AllArrived)
        .map(|o| o.cycles())
        .collect();
    m.success_rate = successes.len() as f64 / outcomes.len().max(1) as f64;
    if !successes.is_empty() {
        m.mean_cycles_to_arrival = Some(successes.iter().sum::<usize>() as f64 / successes.len() as f64);
    }
    m
}

fn summarize(cfg: &ExperimentConfig, o: &TrialOutcome) -> TrialSummary {
    let last = o.records.last();
    TrialSummary {
        trial: o.trial,
        termination: o.termination.clone(),
        cycles: o.cycles(),
        final_source_error: last.map_or(f64::NAN, |r| r.source_error()),
        final_distance: last.map_or(f64::NAN, |r| r.distances[0]),
        constraint_violations: o.records.iter().filter(|r| r.violates_constraints(cfg)).count(),
        abort_reason: o.abort_reason.clone(),
    }
}

/// Runs `cfg.num_trials` trials of `policy` and aggregates them.
pub fn run_experiment(cfg: &ExperimentConfig, policy: PolicyKind, opts: &RunOptions) -> Result<ExperimentResult> {
    cfg.validate()?;
    let start = Instant::now();
    let threads = if opts.threads == 0 { resolve_threads(None) } else { opts.threads };
    let outcomes = run_trials(cfg, policy, threads);
    let metrics = aggregate(cfg, &outcomes);
    let trials = outcomes.iter().map(|o| summarize(cfg, o)).collect();
    Ok(ExperimentResult {
        policy,
        cfg: cfg.clone(),
        metrics,
        trials,
        outcomes,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| SlassError::io(path, e))
}

fn series_csv(values: &[f64], stderr: &[f64]) -> String {
    let mut s = String::from("cycle,value,stderr\n");
    for (n, (v, e)) in values.iter().zip(stderr).enumerate() {
        let _ = writeln!(s, "{},{},{}", n + 1, v, e);
    }
    s
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    policy: PolicyKind,
    config: &'a ExperimentConfig,
    success_rate: f64,
    mean_cycles_to_arrival: Option<f64>,
    final_rmse: f64,
    final_mean_distance: f64,
    constraint_violations: usize,
    trials: &'a [TrialSummary],
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

fn trajectory_csv(o: &TrialOutcome) -> String {
    let k = o.records.first().map_or(0, |r| r.true_robots.len());
    let mut s = String::from("cycle");
    for i in 1..=k {
        let _ = write!(s, ",true_x{i},true_y{i},est_x{i},est_y{i},cmd_x{i},cmd_y{i}");
    }
    s.push_str(",source_est_x,source_est_y,objective\n");
    for r in &o.records {
        let _ = write!(s, "{}", r.cycle);
        for i in 0..k {
            let (t, e, c) = (r.true_robots[i], r.robot_estimates[i], r.control.steps[i]);
            let _ = write!(s, ",{},{},{},{},{},{}", t.x, t.y, e.x, e.y, c.x, c.y);
        }
        let obj = r.objective.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(s, ",{},{},{}", r.source_estimate.x, r.source_estimate.y, obj);
    }
    s
}

/// Paths written by [`write_experiment`].
pub fn experiment_paths(out: &Path, policy: PolicyKind) -> [PathBuf; 3] {
    [
        out.join(format!("{policy}_rmse.csv")),
        out.join(format!("{policy}_distance.csv")),
        out.join(format!("{policy}_manifest.json")),
    ]
}

pub fn write_experiment(result: &ExperimentResult, out: &Path, opts: &RunOptions) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| SlassError::io(out, e))?;
    let m = &result.metrics;
    let [rmse_path, dist_path, manifest_path] = experiment_paths(out, result.policy);
    write_file(&rmse_path, &series_csv(&m.rmse, &m.rmse_stderr))?;
    write_file(&dist_path, &series_csv(&m.mean_distance, &m.distance_stderr))?;
    let manifest = Manifest {
        version: VERSION,
        policy: result.policy,
        config: &result.cfg,
        success_rate: m.success_rate,
        mean_cycles_to_arrival: m.mean_cycles_to_arrival,
        final_rmse: m.final_rmse(),
        final_mean_distance: m.final_distance(),
        constraint_violations: result.constraint_violations(),
        trials: &result.trials,
        wall_time_s: opts.record_timing.then_some(result.wall_time_s),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&manifest_path, &(json + "\n"))?;
    if opts.dump_trajectories {
        let dir = out.join("trajectories");
        fs::create_dir_all(&dir).map_err(|e| SlassError::io(&dir, e))?;
        for o in &result.outcomes {
            let path = dir.join(format!("{}_trial{:03}.csv", result.policy, o.trial));
            write_file(&path, &trajectory_csv(o))?;
        }
    }
    Ok(())
}

/// Several policies run on identical trial streams.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub results: Vec<ExperimentResult>,
}

impl Comparison {
    pub fn get(&self, policy: PolicyKind) -> Option<&ExperimentResult> {
        self.results.iter().find(|r| r.policy == policy)
    }
}

pub fn compare_policies(cfg: &ExperimentConfig, policies: &[PolicyKind], opts: &RunOptions) -> Result<Comparison> {
    if policies.len() < 2 {
        return Err(SlassError::InvalidArgument("compare needs at least two policies".into()));
    }
    let results = policies
        .iter()
        .map(|&p| run_experiment(cfg, p, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison { results })
}

fn side_by_side(results: &[ExperimentResult], pick: impl Fn(&AggregateMetrics) -> &[f64]) -> String {
    let mut s = String::from("cycle");
    for r in results {
        let _ = write!(s, ",{}", r.policy);
    }
    s.push('\n');
    let len = results.first().map_or(0, |r| pick(&r.metrics).len());
    for n in 0..len {
        let _ = write!(s, "{}", n + 1);
        for r in results {
            let _ = write!(s, ",{}", pick(&r.metrics)[n]);
        }
        s.push('\n');
    }
    s
}

/// Writes every policy's experiment outputs plus `comparison_rmse.csv`,
/// `comparison_distance.csv` and `comparison_summary.csv`.
pub fn write_comparison(cmp: &Comparison, out: &Path, opts: &RunOptions) -> Result<()> {
    for r in &cmp.results {
        write_experiment(r, out, opts)?;
    }
    write_file(&out.join("comparison_rmse.csv"), &side_by_side(&cmp.results, |m| &m.rmse))?;
    write_file(
        &out.join("comparison_distance.csv"),
        &side_by_side(&cmp.results, |m| &m.mean_distance),
    )?;
    let mut s = String::from("policy,final_rmse,success_rate,mean_final_distance,mean_cycles_to_arrival\n");
    for r in &cmp.results {
        let m = &r.metrics;
        let cycles = m.mean_cycles_to_arrival.map_or(String::new(), |c| c.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.policy,
            m.final_rmse(),
            m.success_rate,
            m.final_distance(),
            cycles
        );
    }
    write_file(&out.join("comparison_summary.csv"), &s)
}
