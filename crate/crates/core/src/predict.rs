//! Forecasting `θ` past the data window and recovering the predicted minimizer.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::ident::IdentifiedDynamics;
use crate::model::{evaluate_cost, Problem, QuadraticTracking, RecoveryMethod};
use crate::window::{EstimateSequence, WindowedEstimate};
use crate::{Mat, Vector};

/// Default floor on the curvature of projected forecasts.
pub const DEFAULT_MU_FLOOR: f64 = 1e-3;
/// Newton stops once `‖C(x) θ‖ ≤ tol`.
pub const DEFAULT_NEWTON_TOL: f64 = 1e-10;
pub const DEFAULT_NEWTON_MAX_ITER: usize = 100;
/// Sufficient-decrease constant of the Armijo test.
pub const ARMIJO_C: f64 = 1e-4;
/// Smallest step tried by the line search.
pub const MIN_STEP: f64 = 1.0 / (1u64 << 30) as f64;
/// Residual that still counts as converged when the line search stalls.
pub const ACCEPT_RESIDUAL: f64 = 1e-8;

/// `θ̂(t) = Â^H θ̃(N−k)` with `H = t − (N−k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Forecast {
    pub t: usize,
    pub horizon_exponent: usize,
    pub theta_hat: Vector,
    pub anchor: Vector,
}

/// Propagates the anchor estimate `θ̃(N−k)` to `t_target ≥ N`.
///
/// Uses `ident.a_forecast` and repeated matrix-vector products.
pub fn forecast(
    ident: &IdentifiedDynamics,
    anchor: &WindowedEstimate,
    t_target: usize,
    n_collect: usize,
    k: usize,
) -> Result<Forecast> {
    check_anchor(anchor, n_collect, k)?;
    if t_target < n_collect {
        return Err(Error::InvalidArgument(alloc::format!(
            "forecast target {t_target} lies inside the data window (N = {n_collect})"
        )));
    }
    check_dim(
        "anchor estimate",
        ident.a_forecast.nrows(),
        anchor.theta_tilde.len(),
    )?;
    let horizon_exponent = t_target - anchor.t;
    let theta_hat = propagate(&ident.a_forecast, &anchor.theta_tilde, horizon_exponent);
    Ok(Forecast {
        t: t_target,
        horizon_exponent,
        theta_hat,
        anchor: anchor.theta_tilde.clone(),
    })
}

fn check_anchor(anchor: &WindowedEstimate, n_collect: usize, k: usize) -> Result<()> {
    if k == 0 || n_collect < k || anchor.t != n_collect - k {
        return Err(Error::InvalidArgument(alloc::format!(
            "anchor must be the estimate at N - k = {}, got t = {}",
            n_collect as i64 - k as i64,
            anchor.t
        )));
    }
    Ok(())
}

fn propagate(a: &Mat, v: &Vector, steps: usize) -> Vector {
    let mut out = v.clone();
    for _ in 0..steps {
        out = a * out;
    }
    out
}

/// Output of a minimizer recovery.
#[derive(Clone, Debug, PartialEq)]
pub struct MinimizerResult {
    pub x_hat: Vector,
    /// `‖C(x̂) θ‖₂` for the (possibly projected) θ.
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: RecoveryMethod,
    /// θ had to be projected onto the admissible set first.
    pub projected: bool,
}

/// Newton settings shared by the tracking loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub mu_floor: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            mu_floor: DEFAULT_MU_FLOOR,
            tol: DEFAULT_NEWTON_TOL,
            max_iter: DEFAULT_NEWTON_MAX_ITER,
        }
    }
}

/// `x̂ = Ĥ⁻¹ b̃` for the quadratic tracking layout `(b̃₁, b̃₂, h₁₁, h₁₂, h₂₂)`.
///
/// Eigenvalues of `Ĥ` below `mu_floor` are raised to `mu_floor` first.
pub fn recover_minimizer_quadratic(theta_hat: &Vector, mu_floor: f64) -> Result<MinimizerResult> {
    check_dim("quadratic parameter vector", 5, theta_hat.len())?;
    let mut theta = theta_hat.clone();
    let projected = QuadraticTracking::floor_weight_matrix(&mut theta, mu_floor);
    let h = QuadraticTracking::weight_matrix(&theta);
    let b = QuadraticTracking::linear_term(&theta);
    let x_hat = h
        .cholesky()
        .ok_or_else(|| {
            Error::NotPositiveDefinite(crate::linalg::min_eigenvalue(
                &QuadraticTracking::weight_matrix(&theta),
            ))
        })?
        .solve(&b);
    let residual_norm = (QuadraticTracking.jacobian(&x_hat) * &theta).norm();
    Ok(MinimizerResult {
        x_hat,
        residual_norm,
        iterations: 0,
        method: RecoveryMethod::ClosedForm,
        projected,
    })
}

/// Damped Newton with Armijo backtracking on `f(·, θ̂)`.
///
/// θ̂ is projected onto the problem's admissible set first. Steps are halved
/// from 1 down to [`MIN_STEP`]; if no step gives sufficient decrease the
/// iterate is accepted when its residual is already below
/// [`ACCEPT_RESIDUAL`], and reported as non-convergence otherwise.
pub fn recover_minimizer_newton<P: Problem + ?Sized>(
    problem: &P,
    theta_hat: &Vector,
    x_init: &Vector,
    settings: &SolverSettings,
) -> Result<MinimizerResult> {
    check_dim("parameter vector", problem.p(), theta_hat.len())?;
    check_dim("initial point", problem.n(), x_init.len())?;
    let mut theta = theta_hat.clone();
    let projected = problem.project_admissible(&mut theta, settings.mu_floor);

    let mut x = x_init.clone();
    let mut f = evaluate_cost(problem, &x, &theta)?;
    let mut g = problem.jacobian(&x) * &theta;
    let mut residual = g.norm();
    let mut iterations = 0;
    let done = |x: Vector, residual: f64, iterations: usize| MinimizerResult {
        x_hat: x,
        residual_norm: residual,
        iterations,
        method: RecoveryMethod::Newton,
        projected,
    };

    while residual > settings.tol {
        if iterations >= settings.max_iter || !residual.is_finite() {
            return Err(Error::NonConvergence {
                iterations,
                residual,
                best: x.iter().copied().collect(),
            });
        }
        iterations += 1;
        let hess = problem.hessian(&x, &theta);
        let dir = match hess.cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -g.clone(),
        };
        let slope = g.dot(&dir);
        // Allowance for roundoff in f near the optimum.
        let slack = 8.0 * f64::EPSILON * (1.0 + f.abs());
        let mut step = 1.0;
        let accepted = loop {
            let trial = &x + &dir * step;
            let f_trial = evaluate_cost(problem, &trial, &theta)?;
            if f_trial <= f + ARMIJO_C * step * slope + slack {
                break Some((trial, f_trial));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        match accepted {
            Some((trial, f_trial)) => {
                x = trial;
                f = f_trial;
                g = problem.jacobian(&x) * &theta;
                residual = g.norm();
            }
            None if residual <= ACCEPT_RESIDUAL => break,
            None => {
                return Err(Error::NonConvergence {
                    iterations,
                    residual,
                    best: x.iter().copied().collect(),
                })
            }
        }
    }
    Ok(done(x, residual, iterations))
}

/// Dispatches on [`Problem::recovery`].
pub fn recover_minimizer<P: Problem + ?Sized>(
    problem: &P,
    theta: &Vector,
    x_init: &Vector,
    settings: &SolverSettings,
) -> Result<MinimizerResult> {
    match problem.recovery() {
        RecoveryMethod::ClosedForm if problem.p() == 5 && problem.n() == 2 => {
            recover_minimizer_quadratic(theta, settings.mu_floor)
        }
        _ => recover_minimizer_newton(problem, theta, x_init, settings),
    }
}

/// One prediction-phase step.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackPoint {
    pub t: usize,
    pub horizon_exponent: usize,
    pub theta_hat: Vector,
    pub theta_true: Vector,
    pub x_hat: Vector,
    pub x_star: Vector,
    /// The forecast needed projection before solving.
    pub projected: bool,
}

/// Forecast and minimizer recovery for every `t = N..=T`.
///
/// `theta_true` is the full ground-truth path `θ(0..=T)`; the true minimizer
/// is computed by the same solver. Newton is warm-started from the previous
/// step's solution, starting at `x_last = x(N−1)`. Solver errors carry `t`.
pub fn track<P: Problem + ?Sized>(
    problem: &P,
    ident: &IdentifiedDynamics,
    estimates: &EstimateSequence,
    x_last: &Vector,
    theta_true: &[Vector],
    settings: &SolverSettings,
) -> Result<Vec<TrackPoint>> {
    let k = estimates.k;
    let n_collect = estimates.n_collect();
    let anchor = estimates.last().ok_or(Error::InsufficientData {
        needed: 1,
        available: 0,
    })?;
    check_anchor(anchor, n_collect, k)?;
    if theta_true.len() < n_collect + 1 {
        return Err(Error::InsufficientData {
            needed: n_collect + 1,
            available: theta_true.len(),
        });
    }
    let mut theta_hat = propagate(&ident.a_forecast, &anchor.theta_tilde, k);
    let mut x_hat_prev = x_last.clone();
    let mut x_star_prev = x_last.clone();
    let mut out = Vec::with_capacity(theta_true.len() - n_collect);
    for (t, theta) in theta_true.iter().enumerate().skip(n_collect) {
        if t > n_collect {
            theta_hat = &ident.a_forecast * theta_hat;
        }
        let pred =
            recover_minimizer(problem, &theta_hat, &x_hat_prev, settings).map_err(|e| e.at(t))?;
        let truth =
            recover_minimizer(problem, theta, &x_star_prev, settings).map_err(|e| e.at(t))?;
        x_hat_prev = pred.x_hat.clone();
        x_star_prev = truth.x_hat.clone();
        out.push(TrackPoint {
            t,
            horizon_exponent: t - anchor.t,
            theta_hat: theta_hat.clone(),
            theta_true: theta.clone(),
            x_hat: pred.x_hat,
            x_star: truth.x_hat,
            projected: pred.projected,
        });
    }
    Ok(out)
}

/// `sqrt( Σ_{t=T_eval..=T} ‖x̂(t) − x(t)‖² / (T − T_eval + 1) )`.
///
/// `predicted[i]` and `truth[i]` belong to time `T_eval + i`.
pub fn rmse(predicted: &[Vector], truth: &[Vector], t_eval: usize, horizon: usize) -> Result<f64> {
    if horizon < t_eval {
        return Err(Error::InvalidArgument(alloc::format!(
            "evaluation window [{t_eval}, {horizon}] is empty"
        )));
    }
    let len = horizon - t_eval + 1;
    if predicted.len() != len || truth.len() != len {
        return Err(Error::InvalidArgument(alloc::format!(
            "rmse needs {len} points, got {} predicted and {} true",
            predicted.len(),
            truth.len()
        )));
    }
    let mut sum = 0.0;
    for (p, q) in predicted.iter().zip(truth) {
        check_dim("minimizer", q.len(), p.len())?;
        sum += (p - q).norm_squared();
    }
    Ok(libm::sqrt(sum / len as f64))
}

/// [`rmse`] over the part of a tracked sequence inside `[t_eval, T]`.
pub fn track_rmse(points: &[TrackPoint], t_eval: usize, horizon: usize) -> Result<f64> {
    let (pred, truth): (Vec<Vector>, Vec<Vector>) = points
        .iter()
        .filter(|p| p.t >= t_eval && p.t <= horizon)
        .map(|p| (p.x_hat.clone(), p.x_star.clone()))
        .unzip();
    rmse(&pred, &truth, t_eval, horizon)
}
