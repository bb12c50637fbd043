//! One seeded end-to-end run: truth, data collection, reconstruction,
//! identification, forecasting and metrics.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::ident::{identification_error, iv_identify_with, IdentifiedDynamics};
use crate::model::{GradientOracleModel, Problem, ProblemKind};
use crate::predict::{track, track_rmse, SolverSettings, TrackPoint};
use crate::rng::SeededRng;
use crate::simulate::{
    explore_collect, random_transition, simulate_latent, simulate_latent_admissible,
    ExplorationPolicy, LatentDynamics, LatentPath, SafetyBox, TrajectoryBundle,
};
use crate::window::{estimate_all_with, EstimateSequence, GaussMarkovSolver};
use crate::{Mat, Vector};

/// Initial state of the latent (deviation) process.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    /// Draw from the stationary distribution `N(0, Σ_θ)`.
    Stationary,
    /// Start from the given deviation.
    Fixed(Vector),
}

/// Everything needed to run one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub problem: ProblemKind,
    /// Requested window length.
    pub k: usize,
    /// Clip `k` to `⌊(N − p)/2⌋` when the requested value leaves too little
    /// data for identification.
    pub shrink_k: bool,
    pub n_collect: usize,
    pub horizon: usize,
    pub t_eval: usize,
    pub sigma_m: f64,
    pub sigma_p: f64,
    /// Eigenvalue range of the generated transition matrix.
    pub eig_range: (f64, f64),
    /// Use this `A` instead of drawing one.
    pub fixed_a: Option<Mat>,
    /// Constant offset `θ̄`; `None` runs the zero-mean process.
    pub theta_mean: Option<Vector>,
    pub initial: InitialState,
    pub policy: ExplorationPolicy,
    pub safety: Option<SafetyBox>,
    pub stabilize_eps: f64,
    pub solver: GaussMarkovSolver,
    pub newton: SolverSettings,
}

impl Scenario {
    /// Window length actually used.
    pub fn effective_k(&self) -> usize {
        let p = self.problem.p();
        if self.shrink_k && self.n_collect < 2 * self.k + p {
            self.k.min(self.n_collect.saturating_sub(p) / 2)
        } else {
            self.k
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.problem.n();
        let p = self.problem.p();
        let k = self.effective_k();
        let bad = |msg: alloc::string::String| Err(Error::InvalidArgument(msg));
        if k == 0 || k * n < p {
            return bad(alloc::format!("window length k = {k} gives k*n < p = {p}"));
        }
        if self.n_collect < 2 * k + p {
            return bad(alloc::format!(
                "N = {} is below 2k + p = {}",
                self.n_collect,
                2 * k + p
            ));
        }
        if self.t_eval < self.n_collect || self.horizon < self.t_eval {
            return bad(alloc::format!(
                "need N <= T_eval <= T, got N = {}, T_eval = {}, T = {}",
                self.n_collect,
                self.t_eval,
                self.horizon
            ));
        }
        if !(self.sigma_m >= 0.0 && self.sigma_p >= 0.0) {
            return bad("noise levels must be nonnegative".into());
        }
        let (lo, hi) = self.eig_range;
        if !(lo <= hi && hi.abs() < 1.0 && lo.abs() < 1.0) {
            return bad(alloc::format!(
                "eigenvalue range [{lo}, {hi}] must lie in (-1, 1)"
            ));
        }
        if let Some(a) = &self.fixed_a {
            check_dim("transition rows", p, a.nrows())?;
            check_dim("transition columns", p, a.ncols())?;
        }
        if let Some(m) = &self.theta_mean {
            check_dim("parameter mean", p, m.len())?;
        }
        if let InitialState::Fixed(v) = &self.initial {
            check_dim("initial state", p, v.len())?;
        }
        if !(self.stabilize_eps > 0.0 && self.stabilize_eps < 1.0) {
            return bad("stabilization epsilon must lie in (0, 1)".into());
        }
        Ok(())
    }

    /// The gradient oracle; `σ_m = 0` turns noise off and weights windows by `I`.
    pub fn oracle(&self) -> Result<GradientOracleModel> {
        if self.sigma_m == 0.0 {
            Ok(GradientOracleModel::isotropic(self.problem.clone(), 1.0)?.without_noise())
        } else {
            GradientOracleModel::isotropic(self.problem.clone(), self.sigma_m)
        }
    }
}

/// Scalar metrics of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunMetrics {
    pub rmse: f64,
    pub a_err_fro: f64,
    pub a_err_spec: f64,
    pub min_alpha_k: f64,
    pub clipped: bool,
    pub clamp_count: usize,
    /// Prediction steps whose forecast needed projection.
    pub projections: usize,
}

/// Full output of [`run_scenario`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub k: usize,
    pub dynamics: LatentDynamics,
    pub bundle: TrajectoryBundle,
    pub estimates: EstimateSequence,
    pub ident: IdentifiedDynamics,
    pub track: Vec<TrackPoint>,
    pub metrics: RunMetrics,
}

/// Ground truth for `t = 0..=T`. Draws `A` (unless fixed) and then the path.
pub fn generate_truth(
    scenario: &Scenario,
    rng: &mut SeededRng,
) -> Result<(LatentDynamics, LatentPath)> {
    let p = scenario.problem.p();
    let a = match &scenario.fixed_a {
        Some(a) => a.clone(),
        None => random_transition(p, scenario.eig_range.0, scenario.eig_range.1, rng)?,
    };
    let dynamics = LatentDynamics::isotropic(a, scenario.sigma_p)?;
    let steps = scenario.horizon;
    let path = match (&scenario.theta_mean, &scenario.initial) {
        (None, InitialState::Stationary) => {
            let theta0 = crate::simulate::sample_stationary(&dynamics, rng);
            LatentPath::plain(simulate_latent(&dynamics, &theta0, steps, rng)?)
        }
        (None, InitialState::Fixed(theta0)) => {
            LatentPath::plain(simulate_latent(&dynamics, theta0, steps, rng)?)
        }
        (Some(mean), InitialState::Stationary) => {
            let problem = &scenario.problem;
            let floor = scenario.newton.mu_floor;
            simulate_latent_admissible(
                &dynamics,
                mean,
                |v| problem.project_admissible(v, floor),
                steps,
                rng,
            )?
        }
        (Some(mean), InitialState::Fixed(d0)) => {
            let dev = simulate_latent(&dynamics, d0, steps, rng)?;
            let mut clamp_count = 0;
            let theta = dev
                .iter()
                .map(|d| {
                    let mut th = mean + d;
                    if scenario
                        .problem
                        .project_admissible(&mut th, scenario.newton.mu_floor)
                    {
                        clamp_count += 1;
                    }
                    th
                })
                .collect();
            LatentPath {
                theta,
                offset: Some(mean.clone()),
                clamp_count,
            }
        }
    };
    Ok((dynamics, path))
}

/// Truth plus collected data.
pub fn simulate_scenario(
    scenario: &Scenario,
    rng: &mut SeededRng,
) -> Result<(LatentDynamics, TrajectoryBundle)> {
    scenario.validate()?;
    let oracle = scenario.oracle()?;
    let (dynamics, path) = generate_truth(scenario, rng)?;
    let bundle = explore_collect(
        &oracle,
        path,
        &scenario.policy,
        scenario.n_collect,
        scenario.safety.as_ref(),
        rng,
    )?;
    Ok((dynamics, bundle))
}

/// Runs every stage and computes the metrics.
pub fn run_scenario(scenario: &Scenario, rng: &mut SeededRng) -> Result<RunOutput> {
    let (dynamics, bundle) = simulate_scenario(scenario, rng)?;
    let oracle = scenario.oracle()?;
    let k = scenario.effective_k();
    let estimates = estimate_all_with(&bundle, &oracle, k, scenario.solver)?;
    let ident = iv_identify_with(&estimates.estimates, k, scenario.stabilize_eps)?;
    let x_last = bundle
        .x
        .last()
        .cloned()
        .unwrap_or_else(|| Vector::zeros(oracle.n()));
    let points = track(
        &scenario.problem,
        &ident,
        &estimates,
        &x_last,
        &bundle.theta,
        &scenario.newton,
    )?;
    let rmse = track_rmse(&points, scenario.t_eval, scenario.horizon)?;
    let (a_err_fro, a_err_spec) = identification_error(&ident.a_hat, dynamics.transition())?;
    let metrics = RunMetrics {
        rmse,
        a_err_fro,
        a_err_spec,
        min_alpha_k: estimates.min_alpha_k(),
        clipped: ident.clipped,
        clamp_count: bundle.clamp_count,
        projections: points.iter().filter(|p| p.projected).count(),
    };
    Ok(RunOutput {
        k,
        dynamics,
        bundle,
        estimates,
        ident,
        track: points,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::WeightedCentroid;

    fn centroid_scenario() -> Scenario {
        Scenario {
            problem: ProblemKind::Centroid(WeightedCentroid::new(3)),
            k: 1,
            shrink_k: false,
            n_collect: 50,
            horizon: 100,
            t_eval: 60,
            sigma_m: 0.0,
            sigma_p: 0.0,
            eig_range: (0.90, 0.99),
            fixed_a: None,
            theta_mean: None,
            initial: InitialState::Fixed(Vector::from_element(3, 3.0)),
            policy: ExplorationPolicy::RandomBox {
                lo: Vector::from_element(3, -1.0),
                hi: Vector::from_element(3, 1.0),
            },
            safety: None,
            stabilize_eps: 1e-3,
            solver: GaussMarkovSolver::default(),
            newton: SolverSettings::default(),
        }
    }

    #[test]
    fn noiseless_run_is_exact() {
        let s = centroid_scenario();
        let out = run_scenario(&s, &mut SeededRng::new(1, 0)).unwrap();
        for e in &out.estimates.estimates {
            assert!((&e.theta_tilde - &out.bundle.theta[e.t]).amax() <= 1e-10);
        }
        assert!(out.metrics.a_err_fro <= 1e-8);
        assert!(out.metrics.rmse <= 1e-6);
        assert_eq!(out.track.len(), 51);
    }

    #[test]
    fn runs_are_deterministic() {
        let mut s = centroid_scenario();
        s.sigma_m = 0.1;
        s.sigma_p = 0.05;
        s.theta_mean = Some(Vector::from_element(3, 2.0));
        s.initial = InitialState::Stationary;
        let a = run_scenario(&s, &mut SeededRng::new(5, 2)).unwrap();
        let b = run_scenario(&s, &mut SeededRng::new(5, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shrink_k_and_validation() {
        let mut s = centroid_scenario();
        s.k = 30;
        assert!(s.validate().is_err());
        s.shrink_k = true;
        assert_eq!(s.effective_k(), 23);
        assert!(s.validate().is_ok());
        s.t_eval = 40;
        assert!(s.validate().is_err());
    }
}
