use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unstable dynamics: spectral radius {0} is not below 1")]
    UnstableDynamics(f64),

    #[error("transition matrix is singular (|det A| = {0:e})")]
    SingularTransition(f64),

    #[error("covariance is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("measurement noise covariance is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),

    #[error(
        "simulation misconfigured: admissibility clamping fired on {clamped} of {steps} steps"
    )]
    SimulationMisconfigured { clamped: usize, steps: usize },

    #[error("exploration diverged at t = {t}: |x - center|_inf = {distance:e}")]
    DivergentExploration { t: usize, distance: f64 },

    #[error("window at t = {t} is not excited: sigma_min/sigma_max = {ratio:e}")]
    Excitation { t: usize, ratio: f64 },

    #[error("window at t = {t} is ill-conditioned: Gram condition number {condition:e}")]
    IllConditionedWindow { t: usize, condition: f64 },

    #[error("insufficient data: need at least {needed} samples, have {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("ill-conditioned sample moments: condition number {0:e}")]
    IllConditionedMoments(f64),

    #[error(
        "Newton iteration did not converge in {iterations} iterations (gradient norm {residual:e})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("at t = {t}: {source}")]
    AtTime {
        t: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, t: usize) -> Self {
        Error::AtTime {
            t,
            source: Box::new(self),
        }
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            got,
        })
    }
}
