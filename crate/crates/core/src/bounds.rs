//! Computable pieces of the tracking-error decomposition.
//!
//! The forecast error at horizon `H` splits into identification error, the
//! propagated anchor error and fresh process noise. The analysis constants in
//! front of each term are not known, so only the individual components are
//! computed here.

use alloc::vec::Vec;

use crate::linalg;
use crate::simulate::LatentDynamics;
use crate::window::WindowedEstimate;
use crate::Mat;

/// Bound components at one horizon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundComponents {
    /// Horizon exponent `H = t − (N − k)`.
    pub horizon: usize,
    /// `√(p / min α_k)`.
    pub noise_term: f64,
    /// `‖A^H‖₂`.
    pub anchor_decay: f64,
    /// `√(tr Σ_{j<H} A^j Q (A^j)ᵀ)`.
    pub prediction_floor: f64,
    /// `√(tr Σ_θ)`.
    pub floor_limit: f64,
}

/// `√(tr Σ_{j=0..H−1} A^j Q (A^j)ᵀ)`.
pub fn prediction_floor(dynamics: &LatentDynamics, horizon: usize) -> f64 {
    prediction_floor_curve(dynamics, horizon)
        .last()
        .copied()
        .unwrap_or(0.0)
}

/// [`prediction_floor`] for every `H = 0..=max_horizon`.
pub fn prediction_floor_curve(dynamics: &LatentDynamics, max_horizon: usize) -> Vec<f64> {
    let a = dynamics.transition();
    let q = dynamics.noise_cov();
    let p = dynamics.dim();
    let mut s = Mat::zeros(p, p);
    let mut out = Vec::with_capacity(max_horizon + 1);
    out.push(0.0);
    for _ in 0..max_horizon {
        s = a * &s * a.transpose() + q;
        out.push(libm::sqrt(s.trace().max(0.0)));
    }
    out
}

/// `‖A^H‖₂`.
pub fn anchor_decay(dynamics: &LatentDynamics, horizon: usize) -> f64 {
    linalg::spectral_norm(&linalg::matrix_power(dynamics.transition(), horizon))
}

/// `√(p / min_t α_k(t))`; infinite for an empty sequence or `α_k = 0`.
pub fn noise_term(estimates: &[WindowedEstimate]) -> f64 {
    let Some(first) = estimates.first() else {
        return f64::INFINITY;
    };
    let p = first.theta_tilde.len() as f64;
    let alpha = estimates
        .iter()
        .map(|e| e.alpha_k)
        .fold(f64::INFINITY, f64::min);
    libm::sqrt(p / alpha)
}

/// `√(tr Σ_θ)`.
pub fn floor_limit(dynamics: &LatentDynamics) -> f64 {
    libm::sqrt(dynamics.stationary_cov().trace().max(0.0))
}

/// Components for `H = 0..=max_horizon`.
pub fn bound_components(
    dynamics: &LatentDynamics,
    estimates: &[WindowedEstimate],
    max_horizon: usize,
) -> Vec<BoundComponents> {
    let noise = noise_term(estimates);
    let limit = floor_limit(dynamics);
    let a = dynamics.transition();
    let mut power = Mat::identity(dynamics.dim(), dynamics.dim());
    prediction_floor_curve(dynamics, max_horizon)
        .into_iter()
        .enumerate()
        .map(|(h, floor)| {
            if h > 0 {
                power = a * &power;
            }
            BoundComponents {
                horizon: h,
                noise_term: noise,
                anchor_decay: linalg::spectral_norm(&power),
                prediction_floor: floor,
                floor_limit: limit,
            }
        })
        .collect()
}
