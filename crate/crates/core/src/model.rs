//! Cost families `f(x, θ) = g(x)ᵀ θ` and the gradient-oracle model.
//!
//! A problem supplies the feature map `g`, its Jacobian-transpose
//! `C(x) = ∂gᵀ/∂x` (so that `∇ₓ f = C(x) θ`), the Hessian, and a projection onto
//! its admissible (strongly convex) parameter set. The estimation pipeline only
//! talks to the [`Problem`] trait. Constant offsets in the cost are never
//! modeled: they change neither gradients nor minimizers.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, symmetrize, GaussianFactor};
use crate::rng::SeededRng;
use crate::{Mat, Vector};

/// How a problem's minimizer is recovered from a parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecoveryMethod {
    ClosedForm,
    Newton,
}

pub trait Problem {
    /// Identifier used in configuration files.
    fn id(&self) -> &'static str;
    /// Decision dimension.
    fn n(&self) -> usize;
    /// Parameter dimension.
    fn p(&self) -> usize;
    /// `g(x)`, length `p`.
    fn features(&self, x: &Vector) -> Vector;
    /// `C(x) = ∂gᵀ/∂x`, shape `n × p`.
    fn jacobian(&self, x: &Vector) -> Mat;
    /// `∇²ₓ f(x, θ)`, exactly symmetric.
    fn hessian(&self, x: &Vector, theta: &Vector) -> Mat;
    /// Moves `theta` to the nearest admissible value; returns whether it changed.
    fn project_admissible(&self, theta: &mut Vector, mu_floor: f64) -> bool;

    fn is_admissible(&self, theta: &Vector, mu_floor: f64) -> bool {
        let mut t = theta.clone();
        !self.project_admissible(&mut t, mu_floor)
    }

    fn recovery(&self) -> RecoveryMethod {
        RecoveryMethod::Newton
    }
}

fn check_point<P: Problem + ?Sized>(problem: &P, x: &Vector) -> Result<()> {
    check_dim("decision point", problem.n(), x.len())
}

fn check_args<P: Problem + ?Sized>(problem: &P, x: &Vector, theta: &Vector) -> Result<()> {
    check_point(problem, x)?;
    check_dim("parameter vector", problem.p(), theta.len())
}

/// `g(x)ᵀ θ`.
pub fn evaluate_cost<P: Problem + ?Sized>(problem: &P, x: &Vector, theta: &Vector) -> Result<f64> {
    check_args(problem, x, theta)?;
    Ok(problem.features(x).dot(theta))
}

/// Noise-free gradient `C(x) θ`.
pub fn evaluate_gradient<P: Problem + ?Sized>(
    problem: &P,
    x: &Vector,
    theta: &Vector,
) -> Result<Vector> {
    check_args(problem, x, theta)?;
    Ok(problem.jacobian(x) * theta)
}

pub fn evaluate_hessian<P: Problem + ?Sized>(
    problem: &P,
    x: &Vector,
    theta: &Vector,
) -> Result<Mat> {
    check_args(problem, x, theta)?;
    Ok(problem.hessian(x, theta))
}

/// Trajectory-tracking cost `(x − b)ᵀ H (x − b)` rewritten as `g(x)ᵀ θ` with
/// `g(x) = (−2x₁, −2x₂, x₁², 2x₁x₂, x₂²)` and `θ = (b̃₁, b̃₂, h₁₁, h₁₂, h₂₂)`,
/// `b̃ = H b`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QuadraticTracking;

impl QuadraticTracking {
    pub const ID: &'static str = "quadratic-tracking";

    /// `H(θ)` from the last three parameters.
    pub fn weight_matrix(theta: &Vector) -> Mat {
        Mat::from_row_slice(2, 2, &[theta[2], theta[3], theta[3], theta[4]])
    }

    /// `b̃(θ)` from the first two parameters.
    pub fn linear_term(theta: &Vector) -> Vector {
        Vector::from_column_slice(&[theta[0], theta[1]])
    }

    /// Raises the eigenvalues of `H(θ)` to `mu_floor`, leaving `b̃` alone.
    pub fn floor_weight_matrix(theta: &mut Vector, mu_floor: f64) -> bool {
        let h = Self::weight_matrix(theta);
        let eig = nalgebra::linalg::SymmetricEigen::new(h);
        if eig.eigenvalues.iter().all(|&l| l >= mu_floor) {
            return false;
        }
        let floored = eig.eigenvalues.map(|l| l.max(mu_floor));
        let v = &eig.eigenvectors;
        let h = symmetrize(&(v * Mat::from_diagonal(&floored) * v.transpose()));
        theta[2] = h[(0, 0)];
        theta[3] = h[(0, 1)];
        theta[4] = h[(1, 1)];
        true
    }
}

impl Problem for QuadraticTracking {
    fn id(&self) -> &'static str {
        Self::ID
    }

    fn n(&self) -> usize {
        2
    }

    fn p(&self) -> usize {
        5
    }

    fn features(&self, x: &Vector) -> Vector {
        let (x1, x2) = (x[0], x[1]);
        Vector::from_column_slice(&[-2.0 * x1, -2.0 * x2, x1 * x1, 2.0 * x1 * x2, x2 * x2])
    }

    fn jacobian(&self, x: &Vector) -> Mat {
        let (x1, x2) = (x[0], x[1]);
        Mat::from_row_slice(
            2,
            5,
            &[
                -2.0,
                0.0,
                2.0 * x1,
                2.0 * x2,
                0.0, //
                0.0,
                -2.0,
                0.0,
                2.0 * x1,
                2.0 * x2,
            ],
        )
    }

    fn hessian(&self, _x: &Vector, theta: &Vector) -> Mat {
        Self::weight_matrix(theta) * 2.0
    }

    fn project_admissible(&self, theta: &mut Vector, mu_floor: f64) -> bool {
        Self::floor_weight_matrix(theta, mu_floor)
    }

    fn recovery(&self) -> RecoveryMethod {
        RecoveryMethod::ClosedForm
    }
}

/// `log(1 + eᶻ)` with the tails short-circuited where the correction is below
/// double precision.
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        libm::exp(z)
    } else {
        libm::log1p(libm::exp(z))
    }
}

/// Logistic function `1 / (1 + e⁻ᶻ)`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Road-congestion cost
/// `θ₀ ‖x‖²/2 + Σᵢ θᵢ softplus(aᵢᵀx − dᵢ)` over six directional features.
#[derive(Clone, Debug, PartialEq)]
pub struct Congestion {
    directions: [[f64; 2]; 6],
    thresholds: [f64; 6],
}

impl Default for Congestion {
    fn default() -> Self {
        let r = core::f64::consts::FRAC_1_SQRT_2;
        Self {
            directions: [
                [1.0, 0.0],
                [-1.0, 0.0],
                [0.0, 1.0],
                [0.0, -1.0],
                [r, r],
                [r, -r],
            ],
            thresholds: [0.5; 6],
        }
    }
}

impl Congestion {
    pub const ID: &'static str = "congestion";

    pub fn directions(&self) -> &[[f64; 2]; 6] {
        &self.directions
    }

    pub fn thresholds(&self) -> &[f64; 6] {
        &self.thresholds
    }

    fn activation(&self, i: usize, x: &Vector) -> f64 {
        let a = self.directions[i];
        a[0] * x[0] + a[1] * x[1] - self.thresholds[i]
    }
}

impl Problem for Congestion {
    fn id(&self) -> &'static str {
        Self::ID
    }

    fn n(&self) -> usize {
        2
    }

    fn p(&self) -> usize {
        7
    }

    fn features(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(7);
        g[0] = 0.5 * x.norm_squared();
        for i in 0..6 {
            g[i + 1] = softplus(self.activation(i, x));
        }
        g
    }

    fn jacobian(&self, x: &Vector) -> Mat {
        let mut c = Mat::zeros(2, 7);
        c[(0, 0)] = x[0];
        c[(1, 0)] = x[1];
        for i in 0..6 {
            let s = sigmoid(self.activation(i, x));
            c[(0, i + 1)] = s * self.directions[i][0];
            c[(1, i + 1)] = s * self.directions[i][1];
        }
        c
    }

    fn hessian(&self, x: &Vector, theta: &Vector) -> Mat {
        let mut h = Mat::identity(2, 2) * theta[0];
        for i in 0..6 {
            let s = sigmoid(self.activation(i, x));
            let w = theta[i + 1] * s * (1.0 - s);
            let a = self.directions[i];
            h[(0, 0)] += w * a[0] * a[0];
            h[(0, 1)] += w * a[0] * a[1];
            h[(1, 0)] += w * a[1] * a[0];
            h[(1, 1)] += w * a[1] * a[1];
        }
        symmetrize(&h)
    }

    fn project_admissible(&self, theta: &mut Vector, mu_floor: f64) -> bool {
        let mut changed = false;
        if !(theta[0] >= mu_floor) {
            theta[0] = mu_floor;
            changed = true;
        }
        for v in theta.iter_mut().skip(1) {
            if !(*v >= 0.0) {
                *v = 0.0;
                changed = true;
            }
        }
        changed
    }
}

/// Weighted centroid cost `Σᵢ θᵢ ‖x − eᵢ‖²/2` in `d` dimensions (`n = p = d`).
///
/// `C(x) = [x − e₁, …, x − e_d]` is square and invertible off the hyperplane
/// `Σ xⱼ = 1`, so single measurements identify θ; the minimizer is `θ / Σθ`.
/// Used for exact-recovery checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WeightedCentroid {
    dim: usize,
}

impl WeightedCentroid {
    pub const ID: &'static str = "weighted-centroid";

    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl Default for WeightedCentroid {
    fn default() -> Self {
        Self::new(3)
    }
}

impl Problem for WeightedCentroid {
    fn id(&self) -> &'static str {
        Self::ID
    }

    fn n(&self) -> usize {
        self.dim
    }

    fn p(&self) -> usize {
        self.dim
    }

    fn features(&self, x: &Vector) -> Vector {
        let sq = x.norm_squared();
        Vector::from_fn(self.dim, |i, _| 0.5 * (sq - 2.0 * x[i] + 1.0))
    }

    fn jacobian(&self, x: &Vector) -> Mat {
        Mat::from_fn(self.dim, self.dim, |r, c| {
            x[r] - if r == c { 1.0 } else { 0.0 }
        })
    }

    fn hessian(&self, _x: &Vector, theta: &Vector) -> Mat {
        Mat::identity(self.dim, self.dim) * theta.sum()
    }

    fn project_admissible(&self, theta: &mut Vector, mu_floor: f64) -> bool {
        let total = theta.sum();
        if total >= mu_floor {
            return false;
        }
        let shift = (mu_floor - total) / self.dim as f64;
        theta.add_scalar_mut(shift);
        true
    }
}

/// The problems selectable by identifier.
#[derive(Clone, Debug, PartialEq)]
pub enum ProblemKind {
    Quadratic(QuadraticTracking),
    Congestion(Congestion),
    Centroid(WeightedCentroid),
}

impl ProblemKind {
    pub const IDS: [&'static str; 3] =
        [QuadraticTracking::ID, Congestion::ID, WeightedCentroid::ID];

    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            QuadraticTracking::ID => Some(Self::Quadratic(QuadraticTracking)),
            Congestion::ID => Some(Self::Congestion(Congestion::default())),
            WeightedCentroid::ID => Some(Self::Centroid(WeightedCentroid::default())),
            _ => None,
        }
    }

    fn inner(&self) -> &dyn Problem {
        match self {
            Self::Quadratic(p) => p,
            Self::Congestion(p) => p,
            Self::Centroid(p) => p,
        }
    }
}

impl Problem for ProblemKind {
    fn id(&self) -> &'static str {
        self.inner().id()
    }
    fn n(&self) -> usize {
        self.inner().n()
    }
    fn p(&self) -> usize {
        self.inner().p()
    }
    fn features(&self, x: &Vector) -> Vector {
        self.inner().features(x)
    }
    fn jacobian(&self, x: &Vector) -> Mat {
        self.inner().jacobian(x)
    }
    fn hessian(&self, x: &Vector, theta: &Vector) -> Mat {
        self.inner().hessian(x, theta)
    }
    fn project_admissible(&self, theta: &mut Vector, mu_floor: f64) -> bool {
        self.inner().project_admissible(theta, mu_floor)
    }
    fn recovery(&self) -> RecoveryMethod {
        self.inner().recovery()
    }
}

/// A problem together with its measurement-noise covariance `R ≻ 0`.
#[derive(Clone, Debug)]
pub struct GradientOracleModel<P = ProblemKind> {
    problem: P,
    noise_cov: Mat,
    noise: GaussianFactor,
    noise_enabled: bool,
}

impl<P: Problem> GradientOracleModel<P> {
    /// Validates `R` (symmetric, `λ_min(R) > 0`); it is symmetrized on entry.
    pub fn new(problem: P, noise_cov: Mat) -> Result<Self> {
        let n = problem.n();
        check_dim("measurement noise covariance rows", n, noise_cov.nrows())?;
        check_dim("measurement noise covariance columns", n, noise_cov.ncols())?;
        let noise_cov = symmetrize(&noise_cov);
        let min = linalg::min_eigenvalue(&noise_cov);
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite(min));
        }
        let noise = GaussianFactor::new(&noise_cov);
        Ok(Self {
            problem,
            noise_cov,
            noise,
            noise_enabled: true,
        })
    }

    /// `R = σ² I`.
    pub fn isotropic(problem: P, sigma: f64) -> Result<Self> {
        let n = problem.n();
        Self::new(problem, Mat::identity(n, n) * (sigma * sigma))
    }

    /// Same model with measurement noise switched off; `R` is still used as
    /// the estimator weight.
    pub fn without_noise(mut self) -> Self {
        self.noise_enabled = false;
        self
    }

    pub fn problem(&self) -> &P {
        &self.problem
    }

    pub fn noise_cov(&self) -> &Mat {
        &self.noise_cov
    }

    pub fn noise_enabled(&self) -> bool {
        self.noise_enabled
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }

    pub fn p(&self) -> usize {
        self.problem.p()
    }

    pub fn cost(&self, x: &Vector, theta: &Vector) -> Result<f64> {
        evaluate_cost(&self.problem, x, theta)
    }

    pub fn gradient(&self, x: &Vector, theta: &Vector) -> Result<Vector> {
        evaluate_gradient(&self.problem, x, theta)
    }

    pub fn hessian(&self, x: &Vector, theta: &Vector) -> Result<Mat> {
        evaluate_hessian(&self.problem, x, theta)
    }

    /// `C(x) θ + w`, `w ~ N(0, R)`. Noise is drawn (and discarded) even when
    /// disabled so that the random stream stays aligned.
    pub fn measure(&self, x: &Vector, theta: &Vector, rng: &mut SeededRng) -> Result<Vector> {
        let clean = self.gradient(x, theta)?;
        let w = self.noise.sample(rng);
        Ok(if self.noise_enabled { clean + w } else { clean })
    }
}

/// Claimed strong-convexity modulus `mu` over the box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongConvexityCertificate {
    pub mu: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl StrongConvexityCertificate {
    /// Smallest Hessian eigenvalue over a `grid`-per-axis lattice of the box
    /// and the supplied parameter samples.
    pub fn min_curvature<P: Problem + ?Sized>(
        &self,
        problem: &P,
        thetas: &[Vector],
        grid: usize,
    ) -> Result<f64> {
        let n = problem.n();
        check_dim("certificate box", n, self.lo.len())?;
        check_dim("certificate box", n, self.hi.len())?;
        let grid = grid.max(2);
        let total = grid.pow(n as u32);
        let mut idx = vec![0usize; n];
        let mut worst = f64::INFINITY;
        for _ in 0..total {
            let x = Vector::from_fn(n, |i, _| {
                self.lo[i] + (self.hi[i] - self.lo[i]) * idx[i] as f64 / (grid - 1) as f64
            });
            for theta in thetas {
                let h = evaluate_hessian(problem, &x, theta)?;
                worst = worst.min(linalg::min_eigenvalue(&h));
            }
            for d in idx.iter_mut() {
                *d += 1;
                if *d < grid {
                    break;
                }
                *d = 0;
            }
        }
        Ok(worst)
    }

    pub fn holds<P: Problem + ?Sized>(
        &self,
        problem: &P,
        thetas: &[Vector],
        grid: usize,
    ) -> Result<bool> {
        Ok(self.min_curvature(problem, thetas, grid)? >= self.mu - 1e-8)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    /// Central differences with step `1e-6 (1 + |xᵢ|)`.
    fn fd_gradient(f: impl Fn(&Vector) -> f64, x: &Vector) -> Vector {
        Vector::from_fn(x.len(), |i, _| {
            let h = 1e-6 * (1.0 + x[i].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
    }

    #[test]
    fn quadratic_cost_and_gradient() {
        let q = QuadraticTracking;
        let theta = v(&[0.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(evaluate_cost(&q, &v(&[1.0, 1.0]), &theta).unwrap(), 2.0);
        assert_eq!(
            evaluate_gradient(&q, &v(&[1.0, 2.0]), &theta).unwrap(),
            v(&[2.0, 4.0])
        );
        assert_eq!(
            evaluate_hessian(&q, &v(&[0.3, -0.2]), &theta).unwrap(),
            Mat::identity(2, 2) * 2.0
        );
    }

    #[test]
    fn quadratic_jacobian_rows() {
        let c = QuadraticTracking.jacobian(&v(&[1.5, -0.5]));
        assert_eq!(
            c.row(0).iter().copied().collect::<Vec<_>>(),
            [-2.0, 0.0, 3.0, -1.0, 0.0]
        );
        assert_eq!(
            c.row(1).iter().copied().collect::<Vec<_>>(),
            [0.0, -2.0, 0.0, 3.0, -1.0]
        );
    }

    #[test]
    fn congestion_examples() {
        let c = Congestion::default();
        let mut theta = Vector::zeros(7);
        theta[0] = 1.0;
        assert_eq!(evaluate_cost(&c, &v(&[3.0, 4.0]), &theta).unwrap(), 12.5);
        assert_eq!(
            evaluate_hessian(&c, &v(&[0.7, -1.2]), &theta).unwrap(),
            Mat::identity(2, 2)
        );
        let mut theta = Vector::zeros(7);
        theta[1] = 1.0;
        let f = evaluate_cost(&c, &v(&[0.5, 0.0]), &theta).unwrap();
        assert_relative_eq!(f, core::f64::consts::LN_2, epsilon = 1e-15);
    }

    #[test]
    fn zero_theta_zero_gradient() {
        for p in [
            ProblemKind::from_id("quadratic-tracking").unwrap(),
            ProblemKind::from_id("congestion").unwrap(),
            ProblemKind::from_id("weighted-centroid").unwrap(),
        ] {
            let x = Vector::from_element(p.n(), 0.37);
            let g = evaluate_gradient(&p, &x, &Vector::zeros(p.p())).unwrap();
            assert!(g.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = evaluate_cost(&QuadraticTracking, &v(&[1.0]), &Vector::zeros(5)).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 2,
                got: 1,
                ..
            }
        ));
        let err = evaluate_gradient(&Congestion::default(), &v(&[1.0, 0.0]), &Vector::zeros(5))
            .unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 7,
                got: 5,
                ..
            }
        ));
    }

    #[test]
    fn softplus_tails() {
        assert_eq!(softplus(40.0), 40.0);
        assert_eq!(softplus(-40.0), libm::exp(-40.0));
        assert_relative_eq!(softplus(30.0), 30.0, epsilon = 1e-12);
        assert_relative_eq!(softplus(-30.0), libm::exp(-30.0), max_relative = 1e-12);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn noise_covariance_must_be_positive_definite() {
        let r = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            GradientOracleModel::new(QuadraticTracking, r),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn measurement_without_noise_is_exact() {
        let model = GradientOracleModel::isotropic(QuadraticTracking, 0.6)
            .unwrap()
            .without_noise();
        let mut rng = SeededRng::new(1, 0);
        let y = model
            .measure(&v(&[1.0, 2.0]), &v(&[0.0, 0.0, 1.0, 0.0, 1.0]), &mut rng)
            .unwrap();
        assert_eq!(y, v(&[2.0, 4.0]));
    }

    #[test]
    fn quadratic_projection_floors_eigenvalues() {
        let mut theta = v(&[0.0, 0.0, 1.0, 0.0, -1.0]);
        assert!(QuadraticTracking.project_admissible(&mut theta, 1e-3));
        let h = QuadraticTracking::weight_matrix(&theta);
        assert_relative_eq!(linalg::min_eigenvalue(&h), 1e-3, epsilon = 1e-12);
        let mut ok = v(&[1.0, 2.0, 1.0, 0.0, 1.0]);
        assert!(!QuadraticTracking.project_admissible(&mut ok, 1e-3));
    }

    #[test]
    fn congestion_certificate() {
        let c = Congestion::default();
        let mu = 0.5;
        let mut rng = SeededRng::new(11, 0);
        let thetas: Vec<Vector> = (0..20)
            .map(|_| {
                let mut t = Vector::from_fn(7, |_, _| rng.uniform(0.0, 2.0));
                t[0] = mu + rng.uniform(0.0, 1.0);
                t
            })
            .collect();
        let cert = StrongConvexityCertificate {
            mu,
            lo: alloc::vec![-3.0, -3.0],
            hi: alloc::vec![3.0, 3.0],
        };
        assert!(cert.holds(&c, &thetas, 13).unwrap());
    }

    fn arb_problem() -> impl Strategy<Value = ProblemKind> {
        prop_oneof![
            Just(ProblemKind::Quadratic(QuadraticTracking)),
            Just(ProblemKind::Congestion(Congestion::default())),
            Just(ProblemKind::Centroid(WeightedCentroid::default())),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn gradient_matches_finite_differences(
            problem in arb_problem(),
            seed in any::<u64>(),
        ) {
            let mut rng = SeededRng::new(seed, 0);
            let x = Vector::from_fn(problem.n(), |_, _| rng.uniform(-3.0, 3.0));
            let theta = Vector::from_fn(problem.p(), |_, _| rng.uniform(-2.0, 2.0));
            let fd = fd_gradient(|x| evaluate_cost(&problem, x, &theta).unwrap(), &x);
            let g = evaluate_gradient(&problem, &x, &theta).unwrap();
            prop_assert!((g - fd).amax() <= 1e-5);
        }

        #[test]
        fn jacobian_matches_finite_differences_of_features(
            problem in arb_problem(),
            seed in any::<u64>(),
        ) {
            let mut rng = SeededRng::new(seed, 1);
            let x = Vector::from_fn(problem.n(), |_, _| rng.uniform(-3.0, 3.0));
            let c = problem.jacobian(&x);
            for j in 0..problem.p() {
                let fd = fd_gradient(|x| problem.features(x)[j], &x);
                prop_assert!((c.column(j) - fd).amax() <= 1e-5);
            }
        }

        #[test]
        fn congestion_hessian_matches_fd_and_is_symmetric(seed in any::<u64>()) {
            let c = Congestion::default();
            let mut rng = SeededRng::new(seed, 2);
            let x = Vector::from_fn(2, |_, _| rng.uniform(-3.0, 3.0));
            let theta = Vector::from_fn(7, |_, _| rng.uniform(0.0, 2.0));
            let h = evaluate_hessian(&c, &x, &theta).unwrap();
            prop_assert_eq!(h[(0, 1)].to_bits(), h[(1, 0)].to_bits());
            for i in 0..2 {
                let fd = fd_gradient(|x| evaluate_gradient(&c, x, &theta).unwrap()[i], &x);
                prop_assert!((h.row(i).transpose() - fd).amax() <= 1e-4);
            }
        }

        #[test]
        fn congestion_strongly_convex_for_admissible_theta(seed in any::<u64>(), mu in 0.01f64..2.0) {
            let c = Congestion::default();
            let mut rng = SeededRng::new(seed, 3);
            let x = Vector::from_fn(2, |_, _| rng.uniform(-10.0, 10.0));
            let mut theta = Vector::from_fn(7, |_, _| rng.uniform(0.0, 3.0));
            theta[0] = mu + rng.uniform(0.0, 1.0);
            let h = evaluate_hessian(&c, &x, &theta).unwrap();
            prop_assert!(linalg::min_eigenvalue(&h) >= mu - 1e-12);
        }
    }
}
