//! Tracking the minimizer of a time-varying strongly convex cost
//! `f(x, θ(t)) = g(x)ᵀ θ(t)` whose parameters follow unknown linear stochastic
//! dynamics `θ(t+1) = A θ(t) + w(t)`, using only a finite record of noisy
//! gradient measurements `y(t) = C(x(t)) θ(t) + v(t)`.
//!
//! The pipeline has four stages, each in its own module:
//!
//! 1. [`window`]: stack `k` consecutive measurements and reconstruct `θ(t)`
//!    with the weighted (Gauss–Markov) least-squares estimator.
//! 2. [`ident`]: identify `A` from the reconstructed sequence with a lag-`k`
//!    instrumental-variable estimator (plus a biased OLS baseline).
//! 3. [`predict`]: forecast `θ` beyond the data window and recover the
//!    predicted minimizer from `C(x) θ̂ = 0`.
//! 4. [`bounds`]: exactly computable pieces of the tracking-error bound.
//!
//! [`model`] holds the cost families, [`simulate`] the ground-truth generator,
//! and [`pipeline`] wires everything into a single seeded run.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
// `!(x <= y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod error;
pub mod ident;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod predict;
pub mod rng;
pub mod simulate;
pub mod window;

pub use error::{Error, Result};

/// Dense real matrix used throughout the crate.
pub type Mat = nalgebra::DMatrix<f64>;
/// Dense real column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
