//! Small dense linear-algebra helpers on top of `nalgebra`.

use alloc::format;

use nalgebra::linalg::{SymmetricEigen, SVD};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::{Mat, Vector};

/// `(M + Mᵀ) / 2`, exactly symmetric.
pub fn symmetrize(m: &Mat) -> Mat {
    let mut out = m.clone();
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

pub fn spectral_radius(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| libm::hypot(z.re, z.im))
        .fold(0.0, f64::max)
}

/// Singular values, largest first.
pub fn singular_values(m: &Mat) -> Vector {
    let mut sv = SVD::new(m.clone(), false, false).singular_values;
    sv.as_mut_slice()
        .sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(core::cmp::Ordering::Equal));
    sv
}

/// Largest singular value.
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m)[0]
}

/// `σ_max / σ_min`; infinite for a singular matrix.
pub fn condition_number(m: &Mat) -> f64 {
    let sv = singular_values(m);
    let (max, min) = (sv[0], sv[sv.len() - 1]);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: &Mat) -> Vector {
    let mut ev = symmetrize(m).symmetric_eigenvalues();
    ev.as_mut_slice()
        .sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m)[0]
}

pub fn max_eigenvalue(m: &Mat) -> f64 {
    let ev = sym_eigenvalues(m);
    ev[ev.len() - 1]
}

/// `Aᴴ` by repeated squaring.
pub fn matrix_power(a: &Mat, mut exp: usize) -> Mat {
    let mut result = Mat::identity(a.nrows(), a.ncols());
    let mut base = a.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &base;
        }
        exp >>= 1;
        if exp > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Solves `Σ = A Σ Aᵀ + Q` through the vectorized system `(I − A⊗A) vec Σ = vec Q`.
///
/// One step of iterative refinement is applied; the result is symmetrized.
pub fn solve_discrete_lyapunov(a: &Mat, q: &Mat) -> Result<Mat> {
    let p = a.nrows();
    if a.ncols() != p {
        return Err(Error::Dimension {
            what: "transition matrix columns",
            expected: p,
            got: a.ncols(),
        });
    }
    if q.nrows() != p || q.ncols() != p {
        return Err(Error::Dimension {
            what: "process noise covariance",
            expected: p,
            got: q.nrows(),
        });
    }
    let rho = spectral_radius(a);
    if !(rho < 1.0) {
        return Err(Error::UnstableDynamics(rho));
    }
    let lhs = Mat::identity(p * p, p * p) - a.kronecker(a);
    let lu = lhs.lu();
    let rhs = Vector::from_column_slice(q.as_slice());
    let mut sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument(format!("Lyapunov system singular (rho = {rho})")))?;
    let x = Mat::from_column_slice(p, p, sol.as_slice());
    let residual = q - (&x - a * &x * a.transpose());
    if let Some(corr) = lu.solve(&Vector::from_column_slice(residual.as_slice())) {
        sol += corr;
    }
    Ok(symmetrize(&Mat::from_column_slice(p, p, sol.as_slice())))
}

/// Factor `F` with `F Fᵀ = Σ` for drawing `N(0, Σ)` samples.
///
/// Cholesky when `Σ` is positive definite; otherwise an eigen-factorization
/// with negative eigenvalues clipped at zero, which also covers singular `Σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianFactor {
    factor: Mat,
    zero: bool,
}

impl GaussianFactor {
    pub fn new(cov: &Mat) -> Self {
        let cov = symmetrize(cov);
        let zero = cov.iter().all(|v| *v == 0.0);
        if let Some(ch) = cov.clone().cholesky() {
            return Self {
                factor: ch.l(),
                zero,
            };
        }
        let eig = SymmetricEigen::new(cov);
        let mut factor = eig.eigenvectors;
        for (j, lambda) in eig.eigenvalues.iter().enumerate() {
            let s = libm::sqrt(lambda.max(0.0));
            factor.column_mut(j).scale_mut(s);
        }
        Self { factor, zero }
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn factor(&self) -> &Mat {
        &self.factor
    }

    /// Draws one sample. Standard normals are consumed even for a zero
    /// covariance so that the stream position does not depend on `Σ`.
    pub fn sample(&self, rng: &mut SeededRng) -> Vector {
        let z = rng.normal_vector(self.factor.ncols());
        if self.zero {
            Vector::zeros(self.factor.nrows())
        } else {
            &self.factor * z
        }
    }
}

/// Haar-distributed random orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal(p: usize, rng: &mut SeededRng) -> Mat {
    let g = Mat::from_fn(p, p, |_, _| rng.normal());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_matches_repeated_product() {
        let a = Mat::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.7]);
        let mut expect = Mat::identity(2, 2);
        for h in 0..9 {
            assert_relative_eq!(matrix_power(&a, h), expect, epsilon = 1e-14);
            expect = &expect * &a;
        }
    }

    #[test]
    fn scalar_lyapunov() {
        let a = Mat::from_element(1, 1, 0.5);
        let q = Mat::from_element(1, 1, 0.75);
        let s = solve_discrete_lyapunov(&a, &q).unwrap();
        assert_relative_eq!(s[(0, 0)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let a = Mat::identity(2, 2) * 1.01;
        let q = Mat::identity(2, 2);
        assert!(matches!(
            solve_discrete_lyapunov(&a, &q),
            Err(Error::UnstableDynamics(_))
        ));
    }

    #[test]
    fn singular_factor_reproduces_covariance() {
        let v = Vector::from_vec(alloc::vec![1.0, 2.0, -1.0]);
        let cov = &v * v.transpose();
        let f = GaussianFactor::new(&cov);
        assert_relative_eq!(f.factor() * f.factor().transpose(), cov, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let mut rng = SeededRng::new(3, 0);
        let q = random_orthogonal(5, &mut rng);
        assert_relative_eq!(q.transpose() * &q, Mat::identity(5, 5), epsilon = 1e-12);
    }

    #[test]
    fn spectral_radius_of_rotation_scaling() {
        let c = libm::cos(0.3);
        let s = libm::sin(0.3);
        let a = Mat::from_row_slice(2, 2, &[0.9 * c, -0.9 * s, 0.9 * s, 0.9 * c]);
        assert_relative_eq!(spectral_radius(&a), 0.9, epsilon = 1e-12);
    }
}
