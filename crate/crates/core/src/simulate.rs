//! Ground truth: latent parameter paths `θ(t+1) = A θ(t) + w(t)`, noisy
//! gradient measurements, and the data-collection (exploration) policies.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, GaussianFactor};
use crate::model::{GradientOracleModel, Problem};
use crate::rng::SeededRng;
use crate::{Mat, Vector};

/// Largest admissible fraction of clamped steps before a simulation is
/// considered misconfigured.
pub const MAX_CLAMP_RATE: f64 = 0.2;

/// Transition matrix `A` and process-noise covariance `Q` of the latent
/// parameters, with the stationary covariance `Σ_θ = A Σ_θ Aᵀ + Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentDynamics {
    a: Mat,
    q: Mat,
    sigma_theta: Mat,
    process: GaussianFactor,
    stationary: GaussianFactor,
}

impl LatentDynamics {
    /// Checks Schur stability, invertibility (`|det A| > 1e-12`) and `Q ⪰ 0`
    /// (`λ_min ≥ −1e-12` after symmetrization), then solves for `Σ_θ`.
    ///
    /// Controllability (`Σ_θ ≻ 0`) is reported by [`Self::is_controllable`]
    /// rather than enforced, so that noise-free systems (`Q = 0`) remain
    /// constructible.
    pub fn new(a: Mat, q: Mat) -> Result<Self> {
        Self::build(a, q, true)
    }

    /// Like [`Self::new`] but accepts a singular `A` (e.g. `A = 0` for i.i.d.
    /// draws). Identification needs an invertible `A`; this is for simulation.
    pub fn with_singular_transition(a: Mat, q: Mat) -> Result<Self> {
        Self::build(a, q, false)
    }

    fn build(a: Mat, q: Mat, require_invertible: bool) -> Result<Self> {
        let p = a.nrows();
        check_dim("transition matrix columns", p, a.ncols())?;
        check_dim("process noise rows", p, q.nrows())?;
        check_dim("process noise columns", p, q.ncols())?;
        let rho = linalg::spectral_radius(&a);
        if !(rho < 1.0) {
            return Err(Error::UnstableDynamics(rho));
        }
        let det = a.determinant();
        if require_invertible && !(det.abs() > 1e-12) {
            return Err(Error::SingularTransition(det));
        }
        let q = linalg::symmetrize(&q);
        let min = linalg::min_eigenvalue(&q);
        if min < -1e-12 {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        let sigma_theta = linalg::solve_discrete_lyapunov(&a, &q)?;
        Ok(Self {
            process: GaussianFactor::new(&q),
            stationary: GaussianFactor::new(&sigma_theta),
            a,
            q,
            sigma_theta,
        })
    }

    /// `Q = σ_p² I`.
    pub fn isotropic(a: Mat, sigma_p: f64) -> Result<Self> {
        let p = a.nrows();
        Self::new(a, Mat::identity(p, p) * (sigma_p * sigma_p))
    }

    /// Random orthogonal similarity of a diagonal matrix with eigenvalues drawn
    /// uniformly in `[eig_lo, eig_hi]`, and `Q = σ_p² I`.
    pub fn random(
        p: usize,
        eig_lo: f64,
        eig_hi: f64,
        sigma_p: f64,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Self::isotropic(random_transition(p, eig_lo, eig_hi, rng)?, sigma_p)
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn transition(&self) -> &Mat {
        &self.a
    }

    pub fn noise_cov(&self) -> &Mat {
        &self.q
    }

    pub fn stationary_cov(&self) -> &Mat {
        &self.sigma_theta
    }

    pub fn spectral_radius(&self) -> f64 {
        linalg::spectral_radius(&self.a)
    }

    /// `‖Σ_θ − A Σ_θ Aᵀ − Q‖_F`.
    pub fn lyapunov_residual(&self) -> f64 {
        let s = &self.sigma_theta;
        (s - &self.a * s * self.a.transpose() - &self.q).norm()
    }

    /// `Σ_θ ≻ 0`, the stand-in for controllability of `(A, Q^{1/2})`.
    pub fn is_controllable(&self) -> bool {
        let ev = linalg::sym_eigenvalues(&self.sigma_theta);
        let max = ev[ev.len() - 1];
        max > 0.0 && ev[0] > 1e-12 * max
    }

    /// One process-noise draw `w ~ N(0, Q)`.
    pub fn process_noise(&self, rng: &mut SeededRng) -> Vector {
        self.process.sample(rng)
    }
}

/// Eigenvalues uniform in `[eig_lo, eig_hi]` under a random orthogonal basis.
pub fn random_transition(p: usize, eig_lo: f64, eig_hi: f64, rng: &mut SeededRng) -> Result<Mat> {
    if !(eig_lo <= eig_hi && eig_lo.abs() < 1.0 && eig_hi.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue range [{eig_lo}, {eig_hi}] must lie inside (-1, 1)"
        )));
    }
    let u = linalg::random_orthogonal(p, rng);
    let d = Vector::from_fn(p, |_, _| rng.uniform(eig_lo, eig_hi));
    Ok(&u * Mat::from_diagonal(&d) * u.transpose())
}

/// Stationary covariance of `dyn`; fails with [`Error::UnstableDynamics`] for
/// `ρ(A) ≥ 1`.
pub fn stationary_covariance(a: &Mat, q: &Mat) -> Result<Mat> {
    linalg::solve_discrete_lyapunov(a, q)
}

/// A draw from `N(0, Σ_θ)`.
pub fn sample_stationary(dynamics: &LatentDynamics, rng: &mut SeededRng) -> Vector {
    dynamics.stationary.sample(rng)
}

/// `θ(0..=steps)` with `θ(t+1) = A θ(t) + w(t)`.
pub fn simulate_latent(
    dynamics: &LatentDynamics,
    theta0: &Vector,
    steps: usize,
    rng: &mut SeededRng,
) -> Result<Vec<Vector>> {
    check_dim("initial parameter", dynamics.dim(), theta0.len())?;
    let mut out = Vec::with_capacity(steps + 1);
    let mut theta = theta0.clone();
    for _ in 0..steps {
        let next = dynamics.transition() * &theta + dynamics.process_noise(rng);
        out.push(core::mem::replace(&mut theta, next));
    }
    out.push(theta);
    Ok(out)
}

/// A ground-truth parameter path.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentPath {
    pub theta: Vec<Vector>,
    /// Constant mean `θ̄` added to the linear-Gaussian deviation, if any.
    pub offset: Option<Vector>,
    /// Number of states at which admissibility clamping fired.
    pub clamp_count: usize,
}

impl LatentPath {
    pub fn plain(theta: Vec<Vector>) -> Self {
        Self {
            theta,
            offset: None,
            clamp_count: 0,
        }
    }
}

/// `θ(t) = θ̄ + d(t)` with `d(t+1) = A d(t) + w(t)` and `d(0) ~ N(0, Σ_θ)`.
///
/// After every step, `project` moves inadmissible states to the nearest
/// admissible value (returning `true` when it did); the clamped state is
/// carried forward. More than [`MAX_CLAMP_RATE`] clamped states is an error.
pub fn simulate_latent_admissible<F>(
    dynamics: &LatentDynamics,
    mean: &Vector,
    project: F,
    steps: usize,
    rng: &mut SeededRng,
) -> Result<LatentPath>
where
    F: Fn(&mut Vector) -> bool,
{
    check_dim("parameter mean", dynamics.dim(), mean.len())?;
    if project(&mut mean.clone()) {
        return Err(Error::InvalidArgument(
            "parameter mean is not admissible".into(),
        ));
    }
    let mut clamp_count = 0;
    let mut dev = sample_stationary(dynamics, rng);
    let mut theta = Vec::with_capacity(steps + 1);
    for t in 0..=steps {
        if t > 0 {
            dev = dynamics.transition() * &dev + dynamics.process_noise(rng);
        }
        let mut state = mean + &dev;
        if project(&mut state) {
            clamp_count += 1;
            dev = &state - mean;
        }
        theta.push(state);
    }
    let states = steps + 1;
    if clamp_count as f64 > MAX_CLAMP_RATE * states as f64 {
        return Err(Error::SimulationMisconfigured {
            clamped: clamp_count,
            steps: states,
        });
    }
    Ok(LatentPath {
        theta,
        offset: Some(mean.clone()),
        clamp_count,
    })
}

/// `C(x) θ + w_m`, `w_m ~ N(0, R)`.
pub fn measure_gradient<P: Problem>(
    model: &GradientOracleModel<P>,
    x: &Vector,
    theta: &Vector,
    rng: &mut SeededRng,
) -> Result<Vector> {
    model.measure(x, theta, rng)
}

/// How query points `x(t)` are chosen while collecting data.
#[derive(Clone, Debug, PartialEq)]
pub enum ExplorationPolicy {
    /// `x(t+1) = x(t) − η y(t)` on the noisy measurement.
    StaticGradientDescent { x0: Vector, eta: f64 },
    /// `x(t)` i.i.d. uniform on `[lo, hi]`.
    RandomBox { lo: Vector, hi: Vector },
    /// Replay of a given list of points.
    FixedSequence(Vec<Vector>),
}

/// Box around `center` with half-width `radius` (infinity norm). Exploration
/// fails once a query point is more than `10 × radius` outside the box.
#[derive(Clone, Debug, PartialEq)]
pub struct SafetyBox {
    pub center: Vector,
    pub radius: f64,
}

impl SafetyBox {
    fn check(&self, t: usize, x: &Vector) -> Result<()> {
        let distance = (x - &self.center).amax();
        if !(distance <= 11.0 * self.radius) {
            return Err(Error::DivergentExploration { t, distance });
        }
        Ok(())
    }
}

/// Ground truth plus the collected data `{x(t), y(t)}`, `t < N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryBundle {
    /// `θ(0..=T)`.
    pub theta: Vec<Vector>,
    /// Query points `x(0..N)`.
    pub x: Vec<Vector>,
    /// Noisy gradients `y(0..N)`, the columns of the data matrix `Y`.
    pub y: Vec<Vector>,
    pub offset: Option<Vector>,
    pub clamp_count: usize,
}

impl TrajectoryBundle {
    /// Number of collected measurements `N`.
    pub fn n_collect(&self) -> usize {
        self.y.len()
    }

    /// Final time `T`.
    pub fn horizon(&self) -> usize {
        self.theta.len().saturating_sub(1)
    }
}

/// Runs the exploration policy against the ground truth for `n_collect` steps.
pub fn explore_collect<P: Problem>(
    model: &GradientOracleModel<P>,
    path: LatentPath,
    policy: &ExplorationPolicy,
    n_collect: usize,
    safety: Option<&SafetyBox>,
    rng: &mut SeededRng,
) -> Result<TrajectoryBundle> {
    if n_collect == 0 {
        return Err(Error::InvalidArgument(
            "need at least one measurement".into(),
        ));
    }
    if path.theta.len() < n_collect {
        return Err(Error::InsufficientData {
            needed: n_collect,
            available: path.theta.len(),
        });
    }
    let n = model.n();
    let mut xs = Vec::with_capacity(n_collect);
    let mut ys = Vec::with_capacity(n_collect);
    let mut x = match policy {
        ExplorationPolicy::StaticGradientDescent { x0, eta } => {
            check_dim("initial query point", n, x0.len())?;
            if !(eta.is_finite() && *eta >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "step size {eta} must be >= 0"
                )));
            }
            x0.clone()
        }
        ExplorationPolicy::RandomBox { lo, hi } => {
            check_dim("exploration box", n, lo.len())?;
            check_dim("exploration box", n, hi.len())?;
            Vector::zeros(n)
        }
        ExplorationPolicy::FixedSequence(points) => {
            if points.len() < n_collect {
                return Err(Error::InsufficientData {
                    needed: n_collect,
                    available: points.len(),
                });
            }
            Vector::zeros(n)
        }
    };
    for t in 0..n_collect {
        match policy {
            ExplorationPolicy::StaticGradientDescent { .. } => {}
            ExplorationPolicy::RandomBox { lo, hi } => {
                x = Vector::from_fn(n, |i, _| rng.uniform(lo[i], hi[i]));
            }
            ExplorationPolicy::FixedSequence(points) => {
                check_dim("query point", n, points[t].len())?;
                x = points[t].clone();
            }
        }
        if let Some(b) = safety {
            b.check(t, &x)?;
        }
        let y = model.measure(&x, &path.theta[t], rng)?;
        let next = match policy {
            ExplorationPolicy::StaticGradientDescent { eta, .. } => &x - &y * *eta,
            _ => x.clone(),
        };
        xs.push(core::mem::replace(&mut x, next));
        ys.push(y);
    }
    Ok(TrajectoryBundle {
        theta: path.theta,
        x: xs,
        y: ys,
        offset: path.offset,
        clamp_count: path.clamp_count,
    })
}
