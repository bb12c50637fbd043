//! Per-window reconstruction of the latent parameters.
//!
//! `k` consecutive measurements are stacked into `ȳ = C̄ θ + w̄`,
//! `w̄ ~ N(0, I_k ⊗ R)`, and solved with the Gauss–Markov (weighted least
//! squares) estimator `θ̃ = (C̄ᵀR̄⁻¹C̄)⁻¹ C̄ᵀR̄⁻¹ ȳ`. Drift of θ inside the window
//! is deliberately not modeled. The gain `K*` is never formed explicitly: the
//! default path whitens with the Cholesky factor of `R̄` and solves by QR.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, symmetrize};
use crate::model::{GradientOracleModel, Problem};
use crate::simulate::TrajectoryBundle;
use crate::{Mat, Vector};

/// `σ_min(C̄) ≤ RANK_TOLERANCE · σ_max(C̄)` counts as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// Largest accepted condition number of the information matrix `C̄ᵀR̄⁻¹C̄`.
pub const MAX_GRAM_CONDITION: f64 = 1e12;
/// A window is "excited" when `λ_min > EXCITATION_RATIO · λ_max` for the
/// information matrix.
pub const EXCITATION_RATIO: f64 = 1e-8;

/// Linear-algebra route for the weighted least-squares solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GaussMarkovSolver {
    /// QR of the whitened stack `L⁻¹C̄` with `R̄ = L Lᵀ`.
    #[default]
    WhitenedQr,
    /// Cholesky of the information matrix `C̄ᵀR̄⁻¹C̄`; faster, squares the
    /// condition number.
    GramCholesky,
}

/// `k` stacked measurements starting at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedWindow {
    pub t: usize,
    pub y_bar: Vector,
    pub c_bar: Mat,
    pub r_bar: Mat,
}

impl StackedWindow {
    /// Validates shapes, `kn ≥ p` and full column rank of `C̄`.
    pub fn new(t: usize, y_bar: Vector, c_bar: Mat, r_bar: Mat) -> Result<Self> {
        let rows = c_bar.nrows();
        let p = c_bar.ncols();
        check_dim("stacked measurements", rows, y_bar.len())?;
        check_dim("stacked covariance rows", rows, r_bar.nrows())?;
        check_dim("stacked covariance columns", rows, r_bar.ncols())?;
        if rows < p || p == 0 {
            return Err(Error::InsufficientData {
                needed: p,
                available: rows,
            });
        }
        let sv = linalg::singular_values(&c_bar);
        let ratio = if sv[0] > 0.0 { sv[p - 1] / sv[0] } else { 0.0 };
        if !(ratio > RANK_TOLERANCE) {
            return Err(Error::Excitation { t, ratio });
        }
        Ok(Self {
            t,
            y_bar,
            c_bar,
            r_bar,
        })
    }

    pub fn p(&self) -> usize {
        self.c_bar.ncols()
    }

    /// `L⁻¹C̄` and `L⁻¹ȳ` with `R̄ = L Lᵀ`.
    fn whiten(&self) -> Result<(Mat, Vector)> {
        let chol = symmetrize(&self.r_bar)
            .cholesky()
            .ok_or(Error::NotPositiveDefinite(linalg::min_eigenvalue(
                &self.r_bar,
            )))?;
        let l = chol.l();
        let w = l
            .solve_lower_triangular(&self.c_bar)
            .ok_or(Error::NotPositiveDefinite(0.0))?;
        let z = l
            .solve_lower_triangular(&self.y_bar)
            .ok_or(Error::NotPositiveDefinite(0.0))?;
        Ok((w, z))
    }
}

/// Stacks `y(t..t+k)` and `C(x(t..t+k))` from a bundle; `R̄ = I_k ⊗ R`.
pub fn build_window<P: Problem>(
    bundle: &TrajectoryBundle,
    model: &GradientOracleModel<P>,
    t: usize,
    k: usize,
) -> Result<StackedWindow> {
    let n = model.n();
    if k == 0 || t + k > bundle.n_collect() {
        return Err(Error::InsufficientData {
            needed: t + k.max(1),
            available: bundle.n_collect(),
        });
    }
    let p = model.p();
    let mut y_bar = Vector::zeros(k * n);
    let mut c_bar = Mat::zeros(k * n, p);
    let mut r_bar = Mat::zeros(k * n, k * n);
    for j in 0..k {
        let x = &bundle.x[t + j];
        let y = &bundle.y[t + j];
        check_dim("measurement", n, y.len())?;
        y_bar.rows_mut(j * n, n).copy_from(y);
        c_bar
            .view_mut((j * n, 0), (n, p))
            .copy_from(&model.problem().jacobian(x));
        r_bar
            .view_mut((j * n, j * n), (n, n))
            .copy_from(model.noise_cov());
    }
    StackedWindow::new(t, y_bar, c_bar, r_bar)
}

/// Reconstruction `θ̃(t)` with its covariance `Σ_η = (C̄ᵀR̄⁻¹C̄)⁻¹` and the
/// excitation constant `α_k = λ_min(C̄ᵀR̄⁻¹C̄)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedEstimate {
    pub t: usize,
    pub theta_tilde: Vector,
    pub sigma_eta: Mat,
    pub alpha_k: f64,
    /// Condition number of the information matrix.
    pub condition: f64,
}

impl WindowedEstimate {
    pub fn is_excited(&self) -> bool {
        self.condition < 1.0 / EXCITATION_RATIO
    }
}

pub fn gauss_markov_estimate(window: &StackedWindow) -> Result<WindowedEstimate> {
    gauss_markov_estimate_with(window, GaussMarkovSolver::default())
}

pub fn gauss_markov_estimate_with(
    window: &StackedWindow,
    solver: GaussMarkovSolver,
) -> Result<WindowedEstimate> {
    let (w, z) = window.whiten()?;
    let p = window.p();
    let t = window.t;
    match solver {
        GaussMarkovSolver::WhitenedQr => {
            let qr = w.qr();
            let r = qr.r();
            let sv = linalg::singular_values(&r);
            let (smax, smin) = (sv[0], sv[p - 1]);
            let condition = gram_condition(smax, smin);
            if !(condition <= MAX_GRAM_CONDITION) {
                return Err(Error::IllConditionedWindow { t, condition });
            }
            let rhs = qr.q().transpose() * z;
            let theta_tilde = r
                .solve_upper_triangular(&rhs)
                .ok_or(Error::IllConditionedWindow { t, condition })?;
            let r_inv = r
                .solve_upper_triangular(&Mat::identity(p, p))
                .ok_or(Error::IllConditionedWindow { t, condition })?;
            let sigma_eta = symmetrize(&(&r_inv * r_inv.transpose()));
            Ok(WindowedEstimate {
                t,
                theta_tilde,
                sigma_eta,
                alpha_k: smin * smin,
                condition,
            })
        }
        GaussMarkovSolver::GramCholesky => {
            let gram = symmetrize(&(w.transpose() * &w));
            let ev = linalg::sym_eigenvalues(&gram);
            let (lmin, lmax) = (ev[0], ev[p - 1]);
            let condition = if lmin > 0.0 {
                lmax / lmin
            } else {
                f64::INFINITY
            };
            if !(condition <= MAX_GRAM_CONDITION) {
                return Err(Error::IllConditionedWindow { t, condition });
            }
            let chol = gram
                .cholesky()
                .ok_or(Error::IllConditionedWindow { t, condition })?;
            let theta_tilde = chol.solve(&(w.transpose() * z));
            let sigma_eta = symmetrize(&chol.inverse());
            Ok(WindowedEstimate {
                t,
                theta_tilde,
                sigma_eta,
                alpha_k: lmin,
                condition,
            })
        }
    }
}

fn gram_condition(smax: f64, smin: f64) -> f64 {
    if smin > 0.0 {
        let r = smax / smin;
        r * r
    } else {
        f64::INFINITY
    }
}

/// `‖K* C̄ − I_p‖_F` through the estimator's own factorization. Zero in exact
/// arithmetic for every full-rank window (unbiasedness).
pub fn gauss_markov_gain_check(window: &StackedWindow) -> Result<f64> {
    gauss_markov_gain_check_with(window, GaussMarkovSolver::default())
}

pub fn gauss_markov_gain_check_with(
    window: &StackedWindow,
    solver: GaussMarkovSolver,
) -> Result<f64> {
    let (w, _) = window.whiten()?;
    let p = window.p();
    let t = window.t;
    let kc = match solver {
        GaussMarkovSolver::WhitenedQr => {
            let qr = w.clone().qr();
            let r = qr.r();
            r.solve_upper_triangular(&(qr.q().transpose() * &w)).ok_or(
                Error::IllConditionedWindow {
                    t,
                    condition: f64::INFINITY,
                },
            )?
        }
        GaussMarkovSolver::GramCholesky => {
            let gram = symmetrize(&(w.transpose() * &w));
            let chol = gram.clone().cholesky().ok_or(Error::IllConditionedWindow {
                t,
                condition: f64::INFINITY,
            })?;
            chol.solve(&gram)
        }
    };
    Ok((kc - Mat::identity(p, p)).norm())
}

/// The contiguous reconstructions `θ̃(0..=N−k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSequence {
    pub k: usize,
    pub estimates: Vec<WindowedEstimate>,
}

impl EstimateSequence {
    pub fn len(&self) -> usize {
        self.estimates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.estimates.is_empty()
    }

    /// Number of measurements `N` the sequence was built from.
    pub fn n_collect(&self) -> usize {
        self.estimates.len() + self.k - 1
    }

    pub fn min_alpha_k(&self) -> f64 {
        self.estimates
            .iter()
            .map(|e| e.alpha_k)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn thetas(&self) -> Vec<Vector> {
        self.estimates
            .iter()
            .map(|e| e.theta_tilde.clone())
            .collect()
    }

    pub fn last(&self) -> Option<&WindowedEstimate> {
        self.estimates.last()
    }
}

/// Every window `t = 0..=N−k`, failing fast on the first bad window.
pub fn estimate_all<P: Problem>(
    bundle: &TrajectoryBundle,
    model: &GradientOracleModel<P>,
    k: usize,
) -> Result<EstimateSequence> {
    estimate_all_with(bundle, model, k, GaussMarkovSolver::default())
}

pub fn estimate_all_with<P: Problem>(
    bundle: &TrajectoryBundle,
    model: &GradientOracleModel<P>,
    k: usize,
    solver: GaussMarkovSolver,
) -> Result<EstimateSequence> {
    let n_collect = bundle.n_collect();
    if k == 0 || n_collect < k {
        return Err(Error::InsufficientData {
            needed: k.max(1),
            available: n_collect,
        });
    }
    let estimates = (0..=n_collect - k)
        .map(|t| {
            let window = build_window(bundle, model, t, k)?;
            gauss_markov_estimate_with(&window, solver)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateSequence { k, estimates })
}
