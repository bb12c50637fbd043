//! Experiment configuration files.
//!
//! Flat `key = value` lines with dotted section prefixes; `#` starts a
//! comment. Lists are comma separated. Unknown or repeated keys are errors.
//!
//! ```text
//! experiment = tracking
//! problem = quadratic-tracking
//! window.k = 3
//! sweep.N_values = 30, 50, 100, 150, 200
//! noise.sigma_m = 0.6
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tvtrack_core::model::{Problem, ProblemKind, WeightedCentroid};
use tvtrack_core::pipeline::{InitialState, Scenario};
use tvtrack_core::predict::SolverSettings;
use tvtrack_core::rng::{fnv1a64, mix64, SeededRng};
use tvtrack_core::simulate::{random_transition, ExplorationPolicy, SafetyBox};
use tvtrack_core::window::GaussMarkovSolver;
use tvtrack_core::{Mat, Vector};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: cannot parse {value:?}: {reason}")]
    Value {
        key: &'static str,
        value: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "experiment",
    "problem",
    "problem.n",
    "problem.p",
    "window.k",
    "window.shrink_k",
    "window.solver",
    "sweep.N_values",
    "sweep.trials",
    "sweep.seed",
    "sweep.workers",
    "horizon.T",
    "horizon.T_eval",
    "horizon.clip_eval",
    "noise.sigma_m",
    "noise.sigma_p",
    "truth.eig_lo",
    "truth.eig_hi",
    "truth.fixed_A",
    "truth.theta_mean",
    "truth.initial",
    "explore.policy",
    "explore.eta",
    "explore.x0",
    "explore.box_lo",
    "explore.box_hi",
    "safety.center",
    "safety.radius",
    "ident.epsilon",
    "predict.mu_floor",
    "predict.newton_tol",
    "predict.newton_max_iter",
    "track.N",
    "output.dir",
];

#[derive(Clone, Debug, PartialEq)]
pub enum PolicyKind {
    StaticGd,
    RandomBox,
}

/// A validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub problem: ProblemKind,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    pub shrink_k: bool,
    pub solver: GaussMarkovSolver,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; 0 means available parallelism.
    pub workers: usize,
    pub horizon: usize,
    pub t_eval: usize,
    /// Evaluate over `[max(T_eval, N), T]` when `N > T_eval`.
    pub clip_eval: bool,
    pub sigma_m: f64,
    pub sigma_p: f64,
    pub eig_range: (f64, f64),
    pub fixed_a: bool,
    pub theta_mean: Option<Vector>,
    pub initial: InitialState,
    pub policy: PolicyKind,
    pub eta: f64,
    pub x0: Vector,
    pub box_lo: Vector,
    pub box_hi: Vector,
    pub safety: Option<SafetyBox>,
    pub epsilon: f64,
    pub newton: SolverSettings,
    /// Training horizon for single runs (`track`, `simulate`, `diagnose`).
    pub track_n: usize,
    pub output_dir: PathBuf,
}

struct Entries {
    map: BTreeMap<&'static str, String>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.to_string(),
                });
            };
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            };
            if map.insert(known, value.trim().to_string()).is_some() {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
        }
        Ok(Self { map })
    }

    fn raw(&self, key: &'static str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| ConfigError::Value {
                    key,
                    value: v.to_string(),
                    reason: e.to_string(),
                })
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &'static str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn required<T: FromStr>(&self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or(ConfigError::Missing(key))
    }

    fn list<T: FromStr>(&self, key: &'static str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim().parse::<T>().map_err(|e| ConfigError::Value {
                            key,
                            value: v.to_string(),
                            reason: e.to_string(),
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    fn vector(&self, key: &'static str, len: usize) -> Result<Option<Vector>, ConfigError> {
        match self.list::<f64>(key)? {
            None => Ok(None),
            Some(v) if v.len() == len => Ok(Some(Vector::from_vec(v))),
            Some(v) => Err(ConfigError::Value {
                key,
                value: self.raw(key).unwrap_or_default().to_string(),
                reason: format!("expected {len} entries, got {}", v.len()),
            }),
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    fn from_entries(e: &Entries) -> Result<Self, ConfigError> {
        let problem_id: String = e.required("problem")?;
        let problem = match ProblemKind::from_id(&problem_id) {
            Some(ProblemKind::Centroid(_)) => {
                ProblemKind::Centroid(WeightedCentroid::new(e.or("problem.n", 3)?))
            }
            Some(p) => p,
            None => {
                return Err(ConfigError::Value {
                    key: "problem",
                    value: problem_id,
                    reason: format!("expected one of {:?}", ProblemKind::IDS),
                })
            }
        };
        let (n, p) = (problem.n(), problem.p());
        for (key, expected) in [("problem.n", n), ("problem.p", p)] {
            if let Some(given) = e.get::<usize>(key)? {
                if given != expected {
                    return Err(ConfigError::Invalid(format!(
                        "{key} = {given} but problem {problem_id} has {expected}"
                    )));
                }
            }
        }
        let n_values: Vec<usize> = e
            .list("sweep.N_values")?
            .ok_or(ConfigError::Missing("sweep.N_values"))?;
        let solver = match e.or("window.solver", "qr".to_string())?.as_str() {
            "qr" => GaussMarkovSolver::WhitenedQr,
            "cholesky" => GaussMarkovSolver::GramCholesky,
            other => {
                return Err(ConfigError::Value {
                    key: "window.solver",
                    value: other.to_string(),
                    reason: "expected qr or cholesky".into(),
                })
            }
        };
        let policy = match e.or("explore.policy", "static-gd".to_string())?.as_str() {
            "static-gd" => PolicyKind::StaticGd,
            "random-box" => PolicyKind::RandomBox,
            other => {
                return Err(ConfigError::Value {
                    key: "explore.policy",
                    value: other.to_string(),
                    reason: "expected static-gd or random-box".into(),
                })
            }
        };
        let initial = match e.raw("truth.initial") {
            None | Some("stationary") => InitialState::Stationary,
            Some(_) => InitialState::Fixed(e.vector("truth.initial", p)?.expect("present")),
        };
        let safety = match (
            e.vector("safety.center", n)?,
            e.get::<f64>("safety.radius")?,
        ) {
            (None, None) => None,
            (center, Some(radius)) => Some(SafetyBox {
                center: center.unwrap_or_else(|| Vector::zeros(n)),
                radius,
            }),
            (Some(_), None) => return Err(ConfigError::Missing("safety.radius")),
        };
        let default_track_n = n_values.iter().copied().max().unwrap_or(0);
        let cfg = Self {
            experiment: e.required("experiment")?,
            problem,
            n,
            p,
            k: e.required("window.k")?,
            shrink_k: e.or("window.shrink_k", false)?,
            solver,
            n_values,
            trials: e.or("sweep.trials", 30)?,
            seed: e.or("sweep.seed", 0)?,
            workers: e.or("sweep.workers", 0)?,
            horizon: e.required("horizon.T")?,
            t_eval: e.required("horizon.T_eval")?,
            clip_eval: e.or("horizon.clip_eval", false)?,
            sigma_m: e.required("noise.sigma_m")?,
            sigma_p: e.required("noise.sigma_p")?,
            eig_range: (e.or("truth.eig_lo", 0.90)?, e.or("truth.eig_hi", 0.99)?),
            fixed_a: e.or("truth.fixed_A", false)?,
            theta_mean: e.vector("truth.theta_mean", p)?,
            initial,
            policy,
            eta: e.or("explore.eta", 1e-3)?,
            x0: e
                .vector("explore.x0", n)?
                .unwrap_or_else(|| Vector::zeros(n)),
            box_lo: e
                .vector("explore.box_lo", n)?
                .unwrap_or_else(|| Vector::from_element(n, -1.0)),
            box_hi: e
                .vector("explore.box_hi", n)?
                .unwrap_or_else(|| Vector::from_element(n, 1.0)),
            safety,
            epsilon: e.or("ident.epsilon", 1e-3)?,
            newton: SolverSettings {
                mu_floor: e.or("predict.mu_floor", 1e-3)?,
                tol: e.or("predict.newton_tol", 1e-10)?,
                max_iter: e.or("predict.newton_max_iter", 100)?,
            },
            track_n: e.or("track.N", default_track_n)?,
            output_dir: e.or("output.dir", PathBuf::from("out"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Window length used at training horizon `n_collect`.
    pub fn k_for(&self, n_collect: usize) -> usize {
        self.scenario_skeleton(n_collect).effective_k()
    }

    /// Start of the evaluation window at training horizon `n_collect`.
    pub fn t_eval_for(&self, n_collect: usize) -> usize {
        if self.clip_eval {
            self.t_eval.max(n_collect)
        } else {
            self.t_eval
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.experiment.is_empty() || self.experiment.contains([',', '"', '\n']) {
            return invalid(format!(
                "experiment id {:?} must be a plain word",
                self.experiment
            ));
        }
        if self.n_values.is_empty() {
            return invalid("sweep.N_values is empty".into());
        }
        if self.trials == 0 {
            return invalid("sweep.trials must be positive".into());
        }
        if !(0.0 < self.epsilon && self.epsilon <= 0.1) {
            return invalid(format!(
                "ident.epsilon = {} must lie in (0, 0.1]",
                self.epsilon
            ));
        }
        if !(self.newton.mu_floor > 0.0) {
            return invalid("predict.mu_floor must be positive".into());
        }
        if self.policy == PolicyKind::RandomBox
            && self
                .box_lo
                .iter()
                .zip(self.box_hi.iter())
                .any(|(l, h)| !(l <= h))
        {
            return invalid("explore.box_lo must not exceed explore.box_hi".into());
        }
        let max_n = self.n_values.iter().copied().max().unwrap_or(0);
        if !self.clip_eval && self.t_eval < max_n {
            return invalid(format!(
                "horizon.T_eval = {} is below the largest N = {max_n}",
                self.t_eval
            ));
        }
        for &n_collect in self.n_values.iter().chain([&self.track_n]) {
            self.scenario_skeleton(n_collect)
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("N = {n_collect}: {e}")))?;
        }
        Ok(())
    }

    fn scenario_skeleton(&self, n_collect: usize) -> Scenario {
        let policy = match self.policy {
            PolicyKind::StaticGd => ExplorationPolicy::StaticGradientDescent {
                x0: self.x0.clone(),
                eta: self.eta,
            },
            PolicyKind::RandomBox => ExplorationPolicy::RandomBox {
                lo: self.box_lo.clone(),
                hi: self.box_hi.clone(),
            },
        };
        Scenario {
            problem: self.problem.clone(),
            k: self.k,
            shrink_k: self.shrink_k,
            n_collect,
            horizon: self.horizon,
            t_eval: self.t_eval_for(n_collect),
            sigma_m: self.sigma_m,
            sigma_p: self.sigma_p,
            eig_range: self.eig_range,
            fixed_a: None,
            theta_mean: self.theta_mean.clone(),
            initial: self.initial.clone(),
            policy,
            safety: self.safety.clone(),
            stabilize_eps: self.epsilon,
            solver: self.solver,
            newton: self.newton,
        }
    }

    /// Transition matrix shared by all trials when `truth.fixed_A = true`.
    pub fn shared_transition(&self) -> Option<Mat> {
        self.fixed_a.then(|| {
            let seed = mix64(self.seed ^ fnv1a64(self.experiment.as_bytes()));
            let mut rng = SeededRng::new(seed, u64::MAX);
            random_transition(self.p, self.eig_range.0, self.eig_range.1, &mut rng)
                .expect("eigenvalue range validated")
        })
    }

    /// Scenario for one trial at training horizon `n_collect`.
    pub fn scenario(&self, n_collect: usize) -> Scenario {
        let mut s = self.scenario_skeleton(n_collect);
        s.fixed_a = self.shared_transition();
        s
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_entries(&Entries::parse(text)?)
    }
}
