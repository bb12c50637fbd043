//! CSV and JSON artifacts.
//!
//! Floats are written in Rust's shortest round-trip form, so every file is a
//! deterministic, lossless function of the computed values.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use csv::Writer;

use tvtrack_core::bounds::BoundComponents;
use tvtrack_core::model::Problem;
use tvtrack_core::predict::{recover_minimizer, SolverSettings};
use tvtrack_core::simulate::TrajectoryBundle;
use tvtrack_core::window::EstimateSequence;
use tvtrack_core::{Mat, Vector};

use crate::experiment::{Summary, TrialRecord};

pub const RESULTS_HEADER: [&str; 12] = [
    "experiment",
    "trial",
    "N",
    "seed",
    "rmse",
    "a_err_fro",
    "a_err_spec",
    "min_alpha_k",
    "clipped",
    "clamp_count",
    "projections",
    "status",
];

pub const DIAGNOSTICS_HEADER: [&str; 5] = [
    "H",
    "noise_term",
    "anchor_decay",
    "prediction_floor",
    "floor_limit",
];

fn writer(path: &Path) -> Result<Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn indexed(prefix: &str, len: usize) -> impl Iterator<Item = String> + '_ {
    (0..len).map(move |i| format!("{prefix}_{i}"))
}

fn values(v: &Vector) -> impl Iterator<Item = String> + '_ {
    v.iter().map(|x| x.to_string())
}

fn blanks(len: usize) -> impl Iterator<Item = String> {
    std::iter::repeat_n(String::new(), len)
}

pub fn write_results(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        let mut row = vec![
            r.experiment.clone(),
            r.trial.to_string(),
            r.n_collect.to_string(),
            r.seed.to_string(),
        ];
        match &r.outcome {
            Ok(m) => {
                row.extend([
                    m.rmse.to_string(),
                    m.a_err_fro.to_string(),
                    m.a_err_spec.to_string(),
                    m.min_alpha_k.to_string(),
                    u8::from(m.clipped).to_string(),
                    m.clamp_count.to_string(),
                    m.projections.to_string(),
                    "ok".to_string(),
                ]);
            }
            Err(reason) => {
                row.extend(blanks(7));
                row.push(format!("error: {reason}"));
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// `t,phase,theta_true_*,x_*,y_*` for `t = 0..=T`; `x`, `y` are empty after
/// the collection phase.
pub fn write_bundle(path: &Path, bundle: &TrajectoryBundle) -> Result<()> {
    let p = bundle.theta.first().map_or(0, |v| v.len());
    let n = bundle.x.first().map_or(0, |v| v.len());
    let mut w = writer(path)?;
    let header: Vec<String> = ["t".to_string(), "phase".to_string()]
        .into_iter()
        .chain(indexed("theta_true", p))
        .chain(indexed("x", n))
        .chain(indexed("y", n))
        .collect();
    w.write_record(&header)?;
    for (t, theta) in bundle.theta.iter().enumerate() {
        let collect = t < bundle.n_collect();
        let mut row = vec![t.to_string(), phase(collect).to_string()];
        row.extend(values(theta));
        if collect {
            row.extend(values(&bundle.x[t]));
            row.extend(values(&bundle.y[t]));
        } else {
            row.extend(blanks(2 * n));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn phase(collect: bool) -> &'static str {
    if collect {
        "collect"
    } else {
        "predict"
    }
}

/// `t,theta_tilde_*,alpha_k`.
pub fn write_estimates(path: &Path, seq: &EstimateSequence) -> Result<()> {
    let p = seq.estimates.first().map_or(0, |e| e.theta_tilde.len());
    let mut w = writer(path)?;
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(indexed("theta_tilde", p))
        .chain(std::iter::once("alpha_k".to_string()))
        .collect();
    w.write_record(&header)?;
    for e in &seq.estimates {
        let mut row = vec![e.t.to_string()];
        row.extend(values(&e.theta_tilde));
        row.push(e.alpha_k.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// One line per matrix row, no header.
pub fn write_matrix(path: &Path, m: &Mat) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn write_diagnostics(path: &Path, comps: &[BoundComponents]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(DIAGNOSTICS_HEADER)?;
    for c in comps {
        w.write_record([
            c.horizon.to_string(),
            c.noise_term.to_string(),
            c.anchor_decay.to_string(),
            c.prediction_floor.to_string(),
            c.floor_limit.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `t,phase,xhat_*,xstar_*,theta_hat_*,theta_true_*,projected` for
/// `t = 0..=T`.
///
/// During collection `xhat` is the exploration iterate and the forecast
/// columns are empty; `xstar` is always the true minimizer, found with the
/// same solver as the forecast (warm-started along the path).
pub fn write_track<P: Problem + ?Sized>(
    path: &Path,
    problem: &P,
    settings: &SolverSettings,
    run: &tvtrack_core::pipeline::RunOutput,
) -> Result<()> {
    let (n, p) = (problem.n(), problem.p());
    let mut w = writer(path)?;
    let header: Vec<String> = ["t".to_string(), "phase".to_string()]
        .into_iter()
        .chain(indexed("xhat", n))
        .chain(indexed("xstar", n))
        .chain(indexed("theta_hat", p))
        .chain(indexed("theta_true", p))
        .chain(std::iter::once("projected".to_string()))
        .collect();
    w.write_record(&header)?;
    let bundle = &run.bundle;
    let mut x_star = bundle
        .x
        .first()
        .cloned()
        .unwrap_or_else(|| Vector::zeros(n));
    for t in 0..bundle.n_collect() {
        x_star = recover_minimizer(problem, &bundle.theta[t], &x_star, settings)
            .with_context(|| format!("true minimizer at t = {t}"))?
            .x_hat;
        let mut row = vec![t.to_string(), phase(true).to_string()];
        row.extend(values(&bundle.x[t]));
        row.extend(values(&x_star));
        row.extend(blanks(p));
        row.extend(values(&bundle.theta[t]));
        row.push(String::new());
        w.write_record(&row)?;
    }
    for point in &run.track {
        let mut row = vec![point.t.to_string(), phase(false).to_string()];
        row.extend(values(&point.x_hat));
        row.extend(values(&point.x_star));
        row.extend(values(&point.theta_hat));
        row.extend(values(&point.theta_true));
        row.push(u8::from(point.projected).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
