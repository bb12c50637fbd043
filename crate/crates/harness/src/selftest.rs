//! Noiseless exact-recovery checks run by `tvtrack selftest`.

use tvtrack_core::linalg::{spectral_norm, symmetrize};
use tvtrack_core::model::{ProblemKind, WeightedCentroid};
use tvtrack_core::pipeline::{run_scenario, InitialState, Scenario};
use tvtrack_core::predict::SolverSettings;
use tvtrack_core::rng::SeededRng;
use tvtrack_core::simulate::{random_transition, stationary_covariance, ExplorationPolicy};
use tvtrack_core::window::{
    gauss_markov_estimate, gauss_markov_gain_check, GaussMarkovSolver, StackedWindow,
};
use tvtrack_core::{Mat, Vector};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// The noiseless centroid system: `n = p = 3`, `k = 1`, `N = 50`.
pub fn exact_recovery_scenario() -> Scenario {
    Scenario {
        problem: ProblemKind::Centroid(WeightedCentroid::new(3)),
        k: 1,
        shrink_k: false,
        n_collect: 50,
        horizon: 100,
        t_eval: 50,
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

fn exact_recovery(seed: u64) -> Check {
    let name = "noiseless end-to-end recovery";
    match run_scenario(&exact_recovery_scenario(), &mut SeededRng::new(seed, 0)) {
        Ok(out) => {
            let theta_err = out
                .estimates
                .estimates
                .iter()
                .map(|e| (&e.theta_tilde - &out.bundle.theta[e.t]).amax())
                .fold(0.0, f64::max);
            let m = out.metrics;
            Check {
                name,
                passed: theta_err <= 1e-10 && m.a_err_fro <= 1e-8 && m.rmse <= 1e-6,
                detail: format!(
                    "max |θ̃-θ| = {theta_err:.2e}, ‖Â-A‖_F = {:.2e}, rmse = {:.2e}",
                    m.a_err_fro, m.rmse
                ),
            }
        }
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn gauss_markov(seed: u64) -> Check {
    let mut rng = SeededRng::new(seed, 1);
    let mut worst_gain: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    for t in 0..100 {
        let (n, k, p) = (2, 4, 5);
        let c = Mat::from_fn(k * n, p, |_, _| rng.normal());
        let l = Mat::from_fn(k * n, k * n, |_, _| rng.normal());
        let r = symmetrize(&(&l * l.transpose())) + Mat::identity(k * n, k * n);
        let y = rng.normal_vector(k * n);
        let Ok(w) = StackedWindow::new(t, y, c, r) else {
            continue;
        };
        let (Ok(gain), Ok(est)) = (gauss_markov_gain_check(&w), gauss_markov_estimate(&w)) else {
            return Check {
                name: "Gauss-Markov algebra",
                passed: false,
                detail: format!("window {t} failed"),
            };
        };
        worst_gain = worst_gain.max(gain);
        worst_eig = worst_eig.max((spectral_norm(&est.sigma_eta) * est.alpha_k - 1.0).abs());
    }
    Check {
        name: "Gauss-Markov algebra",
        passed: worst_gain <= 1e-10 && worst_eig <= 1e-8,
        detail: format!("max ‖KC-I‖_F = {worst_gain:.2e}, max |λmax·α-1| = {worst_eig:.2e}"),
    }
}

fn lyapunov(seed: u64) -> Check {
    let mut rng = SeededRng::new(seed, 2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let a = random_transition(4, -0.95, 0.95, &mut rng).expect("valid range");
        let l = Mat::from_fn(4, 4, |_, _| rng.normal());
        let q = symmetrize(&(&l * l.transpose()));
        match stationary_covariance(&a, &q) {
            Ok(s) => {
                let res = (&s - &a * &s * a.transpose() - &q).norm() / (1.0 + q.norm());
                worst = worst.max(res);
            }
            Err(_) => worst = f64::INFINITY,
        }
    }
    Check {
        name: "Lyapunov residual",
        passed: worst <= 1e-10,
        detail: format!("max relative residual = {worst:.2e}"),
    }
}

pub fn run(seed: u64) -> Vec<Check> {
    vec![exact_recovery(seed), gauss_markov(seed), lyapunov(seed)]
}
