use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slass::harness::{
    compare_policies, resolve_threads, run_experiment, write_comparison, write_experiment, ExperimentResult, RunOptions,
    VERSION,
};
use slass::sim::Termination;
use slass::{default_paper_config, ExperimentConfig, PolicyKind, SlassError};

/// Exit code when the run completed but some trials aborted.
const EXIT_ABORTED: u8 = 3;

#[derive(Parser)]
#[command(name = "slass", version = VERSION, about = "Multi-robot source seeking from range measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy over many trials.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        policy: PolicyKind,
    },
    /// Run several policies on identical trial streams.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated policy names.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        policies: Vec<PolicyKind>,
    },
    /// Print the reference configuration for a team size.
    DefaultConfig {
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
        robots: u8,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Key-value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `num_trials` from the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; `SLASS_THREADS` takes precedence.
    #[arg(long)]
    threads: Option<usize>,
    /// Write one per-cycle trajectory CSV per trial.
    #[arg(long)]
    dump_trajectories: bool,
    /// Record wall time in the manifest (makes outputs run-dependent).
    #[arg(long)]
    timing: bool,
}

impl CommonArgs {
    fn load(&self) -> Result<(ExperimentConfig, RunOptions), SlassError> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(n) = self.trials {
            cfg.num_trials = n;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        let opts = RunOptions {
            threads: resolve_threads(self.threads),
            dump_trajectories: self.dump_trajectories,
            record_timing: self.timing,
        };
        Ok((cfg, opts))
    }
}

fn announce(cfg: &ExperimentConfig, policies: &[PolicyKind], opts: &RunOptions) {
    let names: Vec<&str> = policies.iter().map(|p| p.as_str()).collect();
    println!(
        "slass {VERSION}: {} with {} robots, {} trials, seed {}, {} threads",
        names.join(", "),
        cfg.num_robots,
        cfg.num_trials,
        cfg.seed,
        opts.threads
    );
}

fn report(result: &ExperimentResult) -> usize {
    let m = &result.metrics;
    println!(
        "{:<10} final RMSE {:>7.3} m  final distance {:>7.3} m  success {:>5.1}%  violations {}",
        result.policy.as_str(),
        m.final_rmse(),
        m.final_distance(),
        100.0 * m.success_rate,
        result.constraint_violations()
    );
    let aborted: Vec<_> = result
        .trials
        .iter()
        .filter(|t| t.termination == Termination::Aborted)
        .collect();
    for t in &aborted {
        eprintln!(
            "{}: trial {} aborted: {}",
            result.policy,
            t.trial,
            t.abort_reason.as_deref().unwrap_or("unknown")
        );
    }
    aborted.len()
}

fn finish(aborted: usize, out: &Path) -> ExitCode {
    println!("outputs written to {}", out.display());
    if aborted > 0 {
        eprintln!("{aborted} trial(s) aborted");
        ExitCode::from(EXIT_ABORTED)
    } else {
        ExitCode::SUCCESS
    }
}

fn execute(cli: Cli) -> Result<ExitCode, SlassError> {
    match cli.command {
        Command::Run { common, policy } => {
            let (cfg, opts) = common.load()?;
            announce(&cfg, &[policy], &opts);
            let result = run_experiment(&cfg, policy, &opts)?;
            write_experiment(&result, &common.out, &opts)?;
            let aborted = report(&result);
            Ok(finish(aborted, &common.out))
        }
        Command::Compare { common, policies } => {
            let (cfg, opts) = common.load()?;
            announce(&cfg, &policies, &opts);
            let cmp = compare_policies(&cfg, &policies, &opts)?;
            write_comparison(&cmp, &common.out, &opts)?;
            let aborted = cmp.results.iter().map(report).sum();
            Ok(finish(aborted, &common.out))
        }
        Command::DefaultConfig { robots } => {
            print!("{}", default_paper_config(robots as usize).to_config_string());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
