//! Seeded trials and Monte Carlo sweeps.

use rayon::prelude::*;
use serde::Serialize;

use tvtrack_core::pipeline::{run_scenario, RunOutput};
use tvtrack_core::rng::{trial_seed, SeededRng};

use crate::config::ExperimentConfig;

/// Fraction of failed trials above which a sweep exits with status 2.
pub const FAILURE_BUDGET: f64 = 0.10;

/// Metrics of a successful trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialMetrics {
    pub rmse: f64,
    pub a_err_fro: f64,
    pub a_err_spec: f64,
    pub min_alpha_k: f64,
    pub clipped: bool,
    pub clamp_count: usize,
    pub projections: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub experiment: String,
    pub trial: usize,
    pub n_collect: usize,
    pub seed: u64,
    /// Metrics, or the reason the trial failed.
    pub outcome: Result<TrialMetrics, String>,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

/// Seed and rng of trial `trial` at horizon `n_collect`; the stream id is the
/// trial index.
pub fn trial_rng(config: &ExperimentConfig, n_collect: usize, trial: usize) -> (u64, SeededRng) {
    let seed = trial_seed(
        config.seed,
        &config.experiment,
        n_collect as u64,
        trial as u64,
    );
    (seed, SeededRng::new(seed, trial as u64))
}

/// Full pipeline output of one trial.
pub fn run_trial_output(
    config: &ExperimentConfig,
    n_collect: usize,
    trial: usize,
) -> (u64, tvtrack_core::Result<RunOutput>) {
    let (seed, mut rng) = trial_rng(config, n_collect, trial);
    (seed, run_scenario(&config.scenario(n_collect), &mut rng))
}

pub fn run_trial(config: &ExperimentConfig, n_collect: usize, trial: usize) -> TrialRecord {
    let (seed, out) = run_trial_output(config, n_collect, trial);
    let outcome = out
        .map(|o| {
            let m = o.metrics;
            TrialMetrics {
                rmse: m.rmse,
                a_err_fro: m.a_err_fro,
                a_err_spec: m.a_err_spec,
                min_alpha_k: m.min_alpha_k,
                clipped: m.clipped,
                clamp_count: m.clamp_count,
                projections: m.projections,
            }
        })
        .map_err(|e| error_chain(&e));
    TrialRecord {
        experiment: config.experiment.clone(),
        trial,
        n_collect,
        seed,
        outcome,
    }
}

fn error_chain(e: &dyn std::error::Error) -> String {
    let mut msg = e.to_string();
    let mut source = e.source();
    while let Some(s) = source {
        msg.push_str(": ");
        msg.push_str(&s.to_string());
        source = s.source();
    }
    msg
}

/// Aggregates for one training horizon; failed trials are excluded.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorizonSummary {
    #[serde(rename = "N")]
    pub n_collect: usize,
    pub mean_rmse: Option<f64>,
    pub std_rmse: Option<f64>,
    pub mean_a_err_fro: Option<f64>,
    pub trials_ok: usize,
    pub trials_failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub experiment: String,
    #[serde(rename = "per_N")]
    pub per_n: Vec<HorizonSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Sorted by `(N, trial)`.
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

impl SweepResult {
    pub fn failed(&self) -> usize {
        self.records.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn over_budget(&self) -> bool {
        self.failed() as f64 > FAILURE_BUDGET * self.records.len() as f64
    }
}

/// `M` trials for every configured `N` on a pool of `config.workers` threads.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult, rayon::ThreadPoolBuildError> {
    let jobs: Vec<(usize, usize)> = config
        .n_values
        .iter()
        .flat_map(|&n| (0..config.trials).map(move |t| (n, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()?;
    // `collect` on an indexed parallel iterator keeps job order.
    let mut records: Vec<TrialRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, t)| run_trial(config, n, t))
            .collect()
    });
    records.sort_by_key(|r| (r.n_collect, r.trial));
    let summary = summarize(&config.experiment, &records);
    Ok(SweepResult { records, summary })
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(std))
}

/// Per-N mean and sample standard deviation of the successful trials.
pub fn summarize(experiment: &str, records: &[TrialRecord]) -> Summary {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n_collect).collect();
    ns.dedup();
    let per_n = ns
        .into_iter()
        .map(|n| {
            let group: Vec<&TrialRecord> = records.iter().filter(|r| r.n_collect == n).collect();
            let ok: Vec<&TrialMetrics> = group
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let rmse: Vec<f64> = ok.iter().map(|m| m.rmse).collect();
            let a_err: Vec<f64> = ok.iter().map(|m| m.a_err_fro).collect();
            let (mean_rmse, std_rmse) = mean_std(&rmse);
            HorizonSummary {
                n_collect: n,
                mean_rmse,
                std_rmse,
                mean_a_err_fro: mean_std(&a_err).0,
                trials_ok: ok.len(),
                trials_failed: group.len() - ok.len(),
            }
        })
        .collect();
    Summary {
        experiment: experiment.to_string(),
        per_n,
    }
}

/// Nonincreasing with at most one adjacent increase, itself at most `slack`
/// relative to the earlier value. `strict` also counts ties as violations.
pub fn trend_holds(values: &[f64], slack: f64, strict: bool) -> bool {
    let mut violations = 0;
    for w in values.windows(2) {
        let increase = if strict { w[1] >= w[0] } else { w[1] > w[0] };
        if increase {
            violations += 1;
            if violations > 1 || (w[1] - w[0]) > slack * w[0].abs() {
                return false;
            }
        }
    }
    values.iter().all(|v| v.is_finite())
}
