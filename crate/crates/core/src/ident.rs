//! Identification of the parameter dynamics `A` from reconstructed parameters.
//!
//! The regression `θ̃(t+1) = A θ̃(t) + ξ(t)` has a regressor that shares the
//! reconstruction noise with the residual, so ordinary least squares is biased
//! towards zero. The instrumental-variable estimator uses the lagged
//! reconstruction `z(t) = θ̃(t−k)`, whose noise comes from a disjoint block of
//! measurements:
//!
//! ```text
//! Â = [Σ θ̃(t+1) θ̃(t−k)ᵀ] [Σ θ̃(t) θ̃(t−k)ᵀ]⁻¹,   t = k..=N−k−1
//! ```

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::window::WindowedEstimate;
use crate::{Mat, Vector};

/// Largest accepted condition number of the sample moment matrix.
pub const MAX_MOMENT_CONDITION: f64 = 1e12;
/// Default margin for [`stabilize`].
pub const DEFAULT_STABILIZE_EPS: f64 = 1e-3;

/// Identified transition matrix.
///
/// `a_hat` is the raw estimator output and is what identification-error
/// metrics use. `a_forecast` is `a_hat` after [`stabilize`]; `clipped` tells
/// whether that changed anything.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentifiedDynamics {
    pub a_hat: Mat,
    pub a_forecast: Mat,
    /// Condition number of the sample moment `Σ θ̃(t) z(t)ᵀ`.
    pub m0_condition: f64,
    /// `ρ(a_hat)`.
    pub spectral_radius: f64,
    pub clipped: bool,
    /// Number of summed terms.
    pub sample_count: usize,
}

impl IdentifiedDynamics {
    fn from_moments(m1: Mat, m0: Mat, sample_count: usize, epsilon: f64) -> Result<Self> {
        let m0_condition = linalg::condition_number(&m0);
        if !(m0_condition <= MAX_MOMENT_CONDITION) {
            return Err(Error::IllConditionedMoments(m0_condition));
        }
        // Â M₀ = M₁  ⇔  M₀ᵀ Âᵀ = M₁ᵀ
        let a_hat_t = m0
            .transpose()
            .lu()
            .solve(&m1.transpose())
            .ok_or(Error::IllConditionedMoments(m0_condition))?;
        let a_hat = a_hat_t.transpose();
        let spectral_radius = linalg::spectral_radius(&a_hat);
        let (a_forecast, clipped) = stabilize(&a_hat, epsilon);
        Ok(Self {
            a_hat,
            a_forecast,
            m0_condition,
            spectral_radius,
            clipped,
            sample_count,
        })
    }
}

fn thetas(estimates: &[WindowedEstimate]) -> Vec<&Vector> {
    estimates.iter().map(|e| &e.theta_tilde).collect()
}

/// Lag-`k` IV estimate from `θ̃(0..=N−k)` (`N − k + 1` estimates).
pub fn iv_identify(estimates: &[WindowedEstimate], k: usize) -> Result<IdentifiedDynamics> {
    iv_identify_with(estimates, k, DEFAULT_STABILIZE_EPS)
}

pub fn iv_identify_with(
    estimates: &[WindowedEstimate],
    k: usize,
    epsilon: f64,
) -> Result<IdentifiedDynamics> {
    iv_identify_vectors(&thetas(estimates), k, epsilon)
}

/// IV estimate on a bare sequence `θ̃(0..=N−k)`.
pub fn iv_identify_vectors(
    thetas: &[&Vector],
    k: usize,
    epsilon: f64,
) -> Result<IdentifiedDynamics> {
    if thetas.is_empty() || k == 0 {
        return Err(Error::InsufficientData {
            needed: 1,
            available: thetas.len(),
        });
    }
    let p = thetas[0].len();
    let n_collect = thetas.len() + k - 1;
    if n_collect < 2 * k + p {
        return Err(Error::InsufficientData {
            needed: 2 * k + p,
            available: n_collect,
        });
    }
    let mut m0 = Mat::zeros(p, p);
    let mut m1 = Mat::zeros(p, p);
    for t in k..n_collect - k {
        check_dim("estimate", p, thetas[t].len())?;
        let z = thetas[t - k].transpose();
        m1 += thetas[t + 1] * &z;
        m0 += thetas[t] * &z;
    }
    IdentifiedDynamics::from_moments(m1, m0, n_collect - 2 * k, epsilon)
}

/// Ordinary least squares `[Σ θ̃(t+1)θ̃(t)ᵀ][Σ θ̃(t)θ̃(t)ᵀ]⁻¹` over every
/// consecutive pair. Biased under reconstruction noise; kept as a baseline.
pub fn ols_identify(estimates: &[WindowedEstimate]) -> Result<IdentifiedDynamics> {
    ols_identify_vectors(&thetas(estimates), DEFAULT_STABILIZE_EPS)
}

pub fn ols_identify_vectors(thetas: &[&Vector], epsilon: f64) -> Result<IdentifiedDynamics> {
    let p = thetas.first().map_or(0, |t| t.len());
    if p == 0 || thetas.len() < p + 1 {
        return Err(Error::InsufficientData {
            needed: p + 1,
            available: thetas.len(),
        });
    }
    let mut gram = Mat::zeros(p, p);
    let mut cross = Mat::zeros(p, p);
    for pair in thetas.windows(2) {
        check_dim("estimate", p, pair[1].len())?;
        let z = pair[0].transpose();
        cross += pair[1] * &z;
        gram += pair[0] * &z;
    }
    IdentifiedDynamics::from_moments(cross, gram, thetas.len() - 1, epsilon)
}

/// `(‖Â − A‖_F, ‖Â − A‖₂)`.
pub fn identification_error(a_hat: &Mat, a_true: &Mat) -> Result<(f64, f64)> {
    check_dim("identified matrix rows", a_true.nrows(), a_hat.nrows())?;
    check_dim("identified matrix columns", a_true.ncols(), a_hat.ncols())?;
    let diff = a_hat - a_true;
    Ok((diff.norm(), linalg::spectral_norm(&diff)))
}

/// Rescales `A` to spectral radius `1 − ε` when `ρ(A) ≥ 1`; otherwise returns
/// it unchanged. The flag reports whether rescaling happened.
pub fn stabilize(a: &Mat, epsilon: f64) -> (Mat, bool) {
    let rho = linalg::spectral_radius(a);
    if rho < 1.0 {
        (a.clone(), false)
    } else {
        (a * ((1.0 - epsilon) / rho), true)
    }
}
