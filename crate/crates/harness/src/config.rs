//! TOML experiment configuration.
//!
//! ```toml
//! [problem]
//! kind = "diagonal"
//! n = 20
//! beta = 4.0
//! nu = 2.0
//!
//! [regularizer]
//! kind = "power_lq"
//! q = 1.5
//!
//! [noise]
//! kappa = 1.0
//! seed = 42
//!
//! [grid]
//! points_per_decade = 20
//!
//! [rules]
//! select = ["HD", "HR", "SQO", "RQO"]
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use heurist_core::{Regularizer, Rule, SolveOptions};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub regularizer: RegularizerSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub rules: RulesSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub conditions: ConditionsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `λ_i = 1/i^β`, `x†_i = s_i/i^ν` with random signs.
    Diagonal {
        n: usize,
        beta: f64,
        nu: f64,
        /// Seed for the signs of `x†`; defaults to the noise seed.
        sign_seed: Option<u64>,
    },
    /// Dense operator and exact solution read from whitespace-separated text.
    Matrix { matrix: PathBuf, x_dagger: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizerSpec {
    PowerLq { q: f64 },
    L1,
    Tv1d,
}

impl RegularizerSpec {
    pub fn build(&self) -> Result<Regularizer> {
        Ok(match *self {
            Self::PowerLq { q } => Regularizer::power_lq(q)?,
            Self::L1 => Regularizer::L1,
            Self::Tv1d => Regularizer::Tv1d,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// Explicit levels; otherwise `count` log-spaced values in `[min, max]`.
    pub levels: Option<Vec<f64>>,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub kappa: Option<f64>,
    pub seed: u64,
    /// Levels are fractions of `‖y‖` when true, absolute norms otherwise.
    pub relative: bool,
    pub repeats: usize,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { levels: None, count: 10, min: 1e-4, max: 1e-1, kappa: None, seed: 0, relative: true, repeats: 1 }
    }
}

impl NoiseSpec {
    pub fn resolved_levels(&self) -> Result<Vec<f64>> {
        let levels = match &self.levels {
            Some(l) => l.clone(),
            None => {
                if self.count == 0 {
                    return Err(HarnessError::Config("noise.count must be positive".into()));
                }
                if !(self.min > 0.0 && self.max >= self.min) {
                    return Err(HarnessError::Config("noise range needs 0 < min <= max".into()));
                }
                if self.count == 1 {
                    vec![self.min]
                } else {
                    let (lo, hi) = (self.min.log10(), self.max.log10());
                    let last = (self.count - 1) as f64;
                    (0..self.count).map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / last)).collect()
                }
            }
        };
        if levels.is_empty() {
            return Err(HarnessError::Config("noise.levels is empty".into()));
        }
        if levels.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(HarnessError::Config("noise levels must be positive".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Config("noise levels must be strictly increasing".into()));
        }
        Ok(levels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub points_per_decade: usize,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points_per_decade: 20, alpha_min: None, alpha_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulesSpec {
    pub select: Vec<Rule>,
}

impl Default for RulesSpec {
    fn default() -> Self {
        Self { select: Rule::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// File stem for `<stem>.csv` and `<stem>.json`.
    pub stem: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), stem: "report".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NonConvergence {
    #[default]
    Error,
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iters: usize,
    pub tol: f64,
    pub on_nonconvergence: NonConvergence,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolveOptions::default();
        Self { max_iters: d.max_iters, tol: d.tol, on_nonconvergence: NonConvergence::Error }
    }
}

impl SolverSpec {
    pub fn options(&self) -> SolveOptions {
        SolveOptions { max_iters: self.max_iters, tol: self.tol, step: None }
    }
}

/// Constants for the diagnostic tables attached to diagonal runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionsSpec {
    pub enabled: bool,
    pub c1: Vec<f64>,
    pub c3: f64,
    pub rqo_const: f64,
}

impl Default for ConditionsSpec {
    fn default() -> Self {
        Self { enabled: true, c1: vec![0.01, 0.1, 1.0], c3: 10.0, rqo_const: 1.0 }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::file(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::file(path, m),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let ProblemSpec::Matrix { matrix, x_dagger } = &mut cfg.problem {
            *matrix = base.join(&*matrix);
            *x_dagger = base.join(&*x_dagger);
        }
        cfg.output.dir = base.join(&cfg.output.dir);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.resolved_levels()?;
        self.regularizer.build()?;
        if self.noise.repeats == 0 {
            return Err(HarnessError::Config("noise.repeats must be at least 1".into()));
        }
        if self.grid.points_per_decade == 0 {
            return Err(HarnessError::Config("grid.points_per_decade must be at least 1".into()));
        }
        if self.rules.select.is_empty() {
            return Err(HarnessError::Config("rules.select is empty".into()));
        }
        if let Some(k) = self.noise.kappa {
            if !(k.is_finite() && k >= 0.0) {
                return Err(HarnessError::Config("noise.kappa must be nonnegative".into()));
            }
        }
        if let ProblemSpec::Diagonal { n, beta, .. } = self.problem {
            if n == 0 || !(beta > 0.0) {
                return Err(HarnessError::Config("diagonal problem needs n >= 1 and beta > 0".into()));
            }
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iters == 0 {
            return Err(HarnessError::Config("solver needs tol > 0 and max_iters >= 1".into()));
        }
        if self.conditions.c1.iter().any(|&c| !(c > 0.0)) || !(self.conditions.c3 > 0.0) {
            return Err(HarnessError::Config("condition constants must be positive".into()));
        }
        Ok(())
    }
}
