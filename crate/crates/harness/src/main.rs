use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use tvtrack::config::{ConfigError, ExperimentConfig};
use tvtrack::experiment::{run_sweep, run_trial_output, trial_rng};
use tvtrack::{output, selftest};
use tvtrack_core::bounds::bound_components;
use tvtrack_core::pipeline::simulate_scenario;

#[derive(Parser)]
#[command(
    name = "tvtrack",
    version,
    about = "Forecast the minimizer of a time-varying cost from noisy gradients"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate ground truth and collected data, write bundle.csv.
    Simulate(RunArgs),
    /// Single end-to-end run; writes track.csv, estimates.csv, a_hat.csv.
    Track(RunArgs),
    /// Monte Carlo sweep over N; writes results.csv and summary.json.
    Sweep(RunArgs),
    /// Bound components over the prediction horizon; writes diagnostics.csv.
    Diagnose(RunArgs),
    /// Noiseless exact-recovery checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `sweep.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `sweep.trials`.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = ExperimentConfig::from_path(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// 0 success, 1 configuration or I/O error, 2 trial failures.
enum Failure {
    Config(anyhow::Error),
    Trials(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.into())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Trials(_) => 2,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Trials(e) => e,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

fn path_in(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = args.load()?;
            let (_, mut rng) = trial_rng(&cfg, cfg.track_n, 0);
            let (_, bundle) = simulate_scenario(&cfg.scenario(cfg.track_n), &mut rng)
                .map_err(|e| Failure::Trials(e.into()))?;
            let path = path_in(&cfg.output_dir, "bundle.csv");
            output::write_bundle(&path, &bundle)?;
            if !args.quiet {
                println!(
                    "wrote {} (N = {}, T = {})",
                    path.display(),
                    cfg.track_n,
                    cfg.horizon
                );
            }
        }
        Command::Track(args) => {
            let cfg = args.load()?;
            let (seed, out) = run_trial_output(&cfg, cfg.track_n, 0);
            let run = out
                .with_context(|| format!("trial 0 at N = {} (seed {seed})", cfg.track_n))
                .map_err(Failure::Trials)?;
            let dir = &cfg.output_dir;
            output::write_track(&path_in(dir, "track.csv"), &cfg.problem, &cfg.newton, &run)
                .map_err(Failure::Trials)?;
            output::write_estimates(&path_in(dir, "estimates.csv"), &run.estimates)?;
            output::write_matrix(&path_in(dir, "a_hat.csv"), &run.ident.a_hat)?;
            output::write_bundle(&path_in(dir, "bundle.csv"), &run.bundle)?;
            if !args.quiet {
                let m = run.metrics;
                println!(
                    "N = {} k = {}: rmse = {:.6} ‖Â-A‖_F = {:.6} min α_k = {:.3e} clipped = {} projections = {}",
                    cfg.track_n, run.k, m.rmse, m.a_err_fro, m.min_alpha_k, m.clipped, m.projections
                );
                println!("wrote {}", dir.display());
            }
        }
        Command::Sweep(args) => {
            let cfg = args.load()?;
            let result = run_sweep(&cfg).context("building worker pool")?;
            output::write_results(&path_in(&cfg.output_dir, "results.csv"), &result.records)?;
            output::write_summary(&path_in(&cfg.output_dir, "summary.json"), &result.summary)?;
            if !args.quiet {
                println!(
                    "{:>6} {:>14} {:>14} {:>14} {:>5} {:>6}",
                    "N", "mean_rmse", "std_rmse", "mean_a_err", "ok", "failed"
                );
                for h in &result.summary.per_n {
                    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
                    println!(
                        "{:>6} {:>14} {:>14} {:>14} {:>5} {:>6}",
                        h.n_collect,
                        f(h.mean_rmse),
                        f(h.std_rmse),
                        f(h.mean_a_err_fro),
                        h.trials_ok,
                        h.trials_failed
                    );
                }
                println!("wrote {}", cfg.output_dir.display());
            }
            if result.over_budget() {
                return Err(Failure::Trials(anyhow::anyhow!(
                    "{} of {} trials failed",
                    result.failed(),
                    result.records.len()
                )));
            }
        }
        Command::Diagnose(args) => {
            let cfg = args.load()?;
            let (seed, out) = run_trial_output(&cfg, cfg.track_n, 0);
            let run = out
                .with_context(|| format!("trial 0 at N = {} (seed {seed})", cfg.track_n))
                .map_err(Failure::Trials)?;
            let max_h = cfg.horizon - (cfg.track_n - run.k);
            let comps = bound_components(&run.dynamics, &run.estimates.estimates, max_h);
            let path = path_in(&cfg.output_dir, "diagnostics.csv");
            output::write_diagnostics(&path, &comps)?;
            if !args.quiet {
                println!("wrote {} (H = 0..={max_h})", path.display());
            }
        }
        Command::Selftest { seed, quiet } => {
            let checks = selftest::run(seed);
            let failed = checks.iter().filter(|c| !c.passed).count();
            if !quiet {
                for c in &checks {
                    println!(
                        "{} {}: {}",
                        if c.passed { "PASS" } else { "FAIL" },
                        c.name,
                        c.detail
                    );
                }
                println!(
                    "{} of {} checks passed",
                    checks.len() - failed,
                    checks.len()
                );
            }
            if failed > 0 {
                return Err(Failure::Trials(anyhow::anyhow!(
                    "{failed} self-checks failed"
                )));
            }
        }
    }
    Ok(())
}
