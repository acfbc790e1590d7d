use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::fem::Mesh;
use crate::hysteresis::PlayParams;
use crate::solver::{DualConfig, FixedPointConfig, NewtonConfig, SolverChoice};
use crate::stepping::{zero_space, zero_space_time, HysteresisSpec, ProblemKind, SpaceFn, SpaceTimeFn, TransientProblem};

/// One of the six convergence cases on the unit cube.
///
/// Odd cases are semilinear, even ones quasilinear; cases 1-2 live in 1D,
/// 3-4 in 2D and 5-6 in 3D. All use a play with `a = -1/2`, `b = 1/2`,
/// `c = 2` and zero initial output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct CaseId(u8);

impl TryFrom<u8> for CaseId {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        if (1..=6).contains(&v) {
            Ok(Self(v))
        } else {
            Err(format!("case must be 1..=6, got {v}"))
        }
    }
}

impl From<CaseId> for u8 {
    fn from(c: CaseId) -> u8 {
        c.0
    }
}

impl CaseId {
    pub fn new(v: u8) -> Result<Self, HarnessError> {
        Self::try_from(v).map_err(HarnessError::Config)
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn dim(self) -> usize {
        (self.0 as usize + 1) / 2
    }

    pub fn kind(self) -> ProblemKind {
        if self.0 % 2 == 1 {
            ProblemKind::Semilinear
        } else {
            ProblemKind::Quasilinear
        }
    }

    pub fn t_final(self) -> f64 {
        [4.9, 5.0, 0.5, 3.0, 1.0, 3.0][self.0 as usize - 1]
    }

    /// Grid parameters of the published experiments.
    pub fn full_scale_grid(self) -> GridConfig {
        let (n_ref, k_ref, n_init, k_init) = match self.0 {
            1 | 2 => (32768, 262144, 32, 256),
            3 => (640, 5120, 5, 10),
            4 => (640, 7680, 10, 40),
            5 => (100, 2000, 5, 10),
            _ => (100, 900, 5, 10),
        };
        let levels = if self.dim() == 3 { 2 } else { 3 };
        GridConfig { n_ref, k_ref, n_init, k_init, r_h: levels, r_tau: 3 }
    }

    /// Problem data on an `n`-per-side mesh with `k` steps.
    pub fn problem(self, n: usize, k: usize, t_final: Option<f64>) -> Result<TransientProblem, HarnessError> {
        let dim = self.dim();
        let g0 = |t: f64| 2.0 * t * (2.0 * PI * t).sin();
        let boundary: SpaceTimeFn = if dim == 1 {
            Arc::new(move |_, t| g0(t))
        } else {
            Arc::new(move |x, t| (x[0] - 0.5) * g0(t))
        };
        let h = |x: f64| x * (0.5 - x) * (1.0 - x);
        let initial: SpaceFn = match dim {
            1 => zero_space(),
            2 => Arc::new(move |x| 1e3 * h(x[0]) * h(x[1])),
            _ => Arc::new(move |x| 1e4 * h(x[0]) * h(x[1]) * h(x[2])),
        };
        Ok(TransientProblem {
            kind: self.kind(),
            mesh: Mesh::uniform(dim, n)?,
            t_final: t_final.unwrap_or(self.t_final()),
            k_steps: k,
            source: zero_space_time(),
            boundary,
            initial,
            hysteresis: HysteresisSpec::Play { params: PlayParams::new(-0.5, 0.5, 2.0)?, w0: zero_space() },
        })
    }
}

/// Reference and refinement grid parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_ref: usize,
    pub k_ref: usize,
    pub n_init: usize,
    pub k_init: usize,
    #[serde(default)]
    pub r_h: usize,
    #[serde(default)]
    pub r_tau: usize,
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.n_init == 0 || self.k_init == 0 || self.n_ref == 0 || self.k_ref == 0 {
            return bad("grid sizes must be positive".into());
        }
        let n_top = self.n_init << self.r_h;
        // Uniform simplex meshes nest for any integer ratio.
        if self.n_ref % n_top != 0 {
            return bad(format!("n_ref = {} must be a multiple of n_init * 2^r_h = {n_top}", self.n_ref));
        }
        let k_top = self.k_init << self.r_tau;
        if self.k_ref % k_top != 0 {
            return bad(format!("k_ref = {} must be a multiple of k_init * 2^r_tau = {k_top}", self.k_ref));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    SmoothingNewton,
    FixedPoint,
    DualIteration,
}

/// Solver selection with every tunable constant. Unset keys take the
/// solver defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub kind: SolverKind,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub linear_tol: Option<f64>,
    pub rho: Option<f64>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub sigma: Option<f64>,
    pub mu: Option<f64>,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
}

fn default_tol() -> f64 {
    1e-11
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::of_kind(SolverKind::SmoothingNewton)
    }
}

impl SolverConfig {
    pub fn of_kind(kind: SolverKind) -> Self {
        Self {
            kind,
            tol: default_tol(),
            max_iter: None,
            linear_tol: None,
            rho: None,
            alpha: None,
            eta: None,
            gamma: None,
            sigma: None,
            mu: None,
            beta: None,
            lambda: None,
        }
    }

    pub fn choice(&self) -> Result<SolverChoice, HarnessError> {
        let choice = match self.kind {
            SolverKind::SmoothingNewton => {
                let d = NewtonConfig::default();
                let c = NewtonConfig {
                    rho: self.rho.unwrap_or(d.rho),
                    alpha: self.alpha.unwrap_or(d.alpha),
                    eta: self.eta.unwrap_or(d.eta),
                    gamma: self.gamma.unwrap_or(d.gamma),
                    sigma: self.sigma.unwrap_or(d.sigma),
                    mu: self.mu.unwrap_or(d.mu),
                    tol: self.tol,
                    max_iter: self.max_iter.unwrap_or(d.max_iter),
                    linear_tol: self.linear_tol.unwrap_or(d.linear_tol),
                    record_iterates: false,
                };
                c.validate()?;
                SolverChoice::SmoothingNewton(c)
            }
            SolverKind::FixedPoint => {
                let d = FixedPointConfig::default();
                SolverChoice::FixedPoint(FixedPointConfig {
                    beta: self.beta.unwrap_or(d.beta),
                    tol: self.tol,
                    max_iter: self.max_iter.unwrap_or(d.max_iter),
                    linear_tol: self.linear_tol.unwrap_or(d.linear_tol),
                })
            }
            SolverKind::DualIteration => {
                let d = DualConfig::default();
                SolverChoice::DualIteration(DualConfig {
                    beta: self.beta.unwrap_or(d.beta),
                    lambda: self.lambda.unwrap_or(d.lambda),
                    tol: self.tol,
                    max_iter: self.max_iter.unwrap_or(d.max_iter),
                    linear_tol: self.linear_tol.unwrap_or(d.linear_tol),
                })
            }
        };
        Ok(choice)
    }
}

/// Resolution of a single `run-case` invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    /// Steps whose state is written as a snapshot (the final one always is).
    #[serde(default)]
    pub snapshots: Vec<usize>,
}

/// Convergence study of one case.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub case: CaseId,
    /// Overrides the case's final time.
    pub t_final: Option<f64>,
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub run: Option<RunConfig>,
    /// Output directory, relative paths resolve against the output root.
    pub output_dir: Option<PathBuf>,
    /// Directory for cached reference solutions; none disables caching.
    pub cache_dir: Option<PathBuf>,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.grid.validate()?;
        self.solver.choice()?;
        if let Some(t) = self.t_final {
            if !(t > 0.0) {
                return Err(HarnessError::Config(format!("t_final = {t} must be positive")));
            }
        }
        Ok(())
    }

    pub fn t_final(&self) -> f64 {
        self.t_final.unwrap_or(self.case.t_final())
    }

    pub fn problem(&self, n: usize, k: usize) -> Result<TransientProblem, HarnessError> {
        self.case.problem(n, k, self.t_final)
    }

    pub fn output_dir(&self) -> PathBuf {
        resolve_output(self.output_dir.as_deref(), &format!("case{}", self.case.number()))
    }
}

/// Solver comparison on the 3D Preisach problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Mesh cells per side.
    pub n: usize,
    pub k_steps: usize,
    #[serde(default = "one")]
    pub t_final: f64,
    /// Amplitude and angular frequency of the source `amp * sin(freq * t)`.
    #[serde(default = "default_amp")]
    pub source_amplitude: f64,
    #[serde(default = "default_freq")]
    pub source_frequency: f64,
    /// Number of r-nodes of the Preisach quadrature.
    #[serde(default = "default_preisach_nodes")]
    pub preisach_nodes: usize,
    /// Step whose nonlinear solve is timed by every solver.
    pub matched_step: usize,
    /// Also run the whole transient with every solver.
    #[serde(default)]
    pub full_transient: bool,
    pub solvers: Vec<SolverConfig>,
    pub output_dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

fn default_amp() -> f64 {
    2000.0
}

fn default_freq() -> f64 {
    3.0 * PI
}

fn default_preisach_nodes() -> usize {
    100
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.solvers.is_empty() {
            return Err(HarnessError::Config("solver list is empty".into()));
        }
        if self.matched_step == 0 || self.matched_step > self.k_steps {
            return Err(HarnessError::Config(format!(
                "matched_step = {} must lie in 1..={}",
                self.matched_step, self.k_steps
            )));
        }
        for s in &self.solvers {
            s.choice()?;
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        resolve_output(self.output_dir.as_deref(), "bench")
    }
}

/// Scalar Preisach loop under the two-tone excitation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreisachDemoConfig {
    #[serde(default = "default_preisach_nodes")]
    pub preisach_nodes: usize,
    /// Time samples per excitation period; a multiple of 4 hits the extrema.
    pub samples_per_period: usize,
    #[serde(default = "two")]
    pub periods: usize,
    /// Peak input reached from negative saturation before returning to zero.
    #[serde(default = "default_peak")]
    pub initial_peak: f64,
    pub output_dir: Option<PathBuf>,
}

fn two() -> usize {
    2
}

fn default_peak() -> f64 {
    308.672
}

impl PreisachDemoConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.samples_per_period == 0 || self.samples_per_period % 4 != 0 || self.periods == 0 {
            return Err(HarnessError::Config("samples_per_period must be a positive multiple of 4".into()));
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        resolve_output(self.output_dir.as_deref(), "preisach")
    }
}

/// Environment variable naming the root of all relative output paths.
pub const OUTPUT_ROOT_VAR: &str = "HYSFEM_OUT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}

fn resolve_output(dir: Option<&Path>, default: &str) -> PathBuf {
    match dir {
        Some(d) if d.is_absolute() => d.to_path_buf(),
        Some(d) => output_root().join(d),
        None => output_root().join(default),
    }
}

/// Reads and parses a TOML file, naming the path in every error.
pub fn load_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| HarnessError::ReadConfig { path: path.to_path_buf(), source })?;
    toml::from_str(&text).map_err(|e| HarnessError::ParseConfig { path: path.to_path_buf(), message: e.to_string() })
}
