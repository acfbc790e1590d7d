//! Solvers for `A x + F(x) = f` with SPD `A` and a diagonal, nondecreasing,
//! piecewise-smooth `F(x)_i = phi_i(x_i)`.

mod dual;
mod fixed_point;
mod linear;
mod newton;
pub mod smoothing;

pub use dual::{dual_iteration, resolvent, DualConfig};
pub use fixed_point::{fixed_point, FixedPointConfig};
pub use linear::{pcg, spd_solve, LINEAR_TOL};
pub use newton::{newton_matrix, smoothing_newton, NewtonConfig, NewtonStep};
pub use smoothing::{
    build_arc, cdist, detect_window, eval_smoothed, smooth_nonlinearity, tangent_extendable, ArcData,
    KinkSmoothing, SmoothedNonlinearity, TangentExtension,
};

use std::time::Duration;

use rayon::prelude::*;
use thiserror::Error;

use crate::fem::SparseMatrix;
use crate::piecewise::ScalarPiecewiseC2;

#[derive(Debug, Error, Clone)]
pub enum SolveError {
    #[error("expected length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite (curvature {curvature:e})")]
    NotPositiveDefinite { curvature: f64 },
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {residual:e})")]
    LinearSolver { iterations: usize, residual: f64 },
    #[error("no tangent-extendable window found around the kink at {kink}")]
    WindowDetection { kink: f64 },
    #[error("tangent slopes coincide, the kink needs no smoothing")]
    NoSmoothingNeeded,
    #[error("arc anchors {x1}, {x2} are not equidistant from the corner at {x0}")]
    ArcAnchors { x1: f64, x2: f64, x0: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("{solver}: no convergence in {} iterations, residual {:e}", .report.nonlinear_iterations, .report.final_residual())]
    MaxIterations { solver: &'static str, report: Box<SolveReport> },
    #[error("line search stagnated after {backtracks} backtracks, residual {:e}", .report.final_residual())]
    LineSearch { backtracks: usize, report: Box<SolveReport> },
    #[error("smoothing level selection needed more than {halvings} halvings")]
    SmoothingLevel { halvings: usize },
    #[error("resolvent bracket failed for y = {y}")]
    Resolvent { y: f64 },
}

impl SolveError {
    /// The partial report carried by non-convergence errors.
    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            Self::MaxIterations { report, .. } | Self::LineSearch { report, .. } => Some(report),
            _ => None,
        }
    }
}

/// Counters and residual history of one nonlinear solve.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub nonlinear_iterations: usize,
    pub linear_iterations: usize,
    /// Evaluations of `H` or its smoothed version, line-search trials included.
    pub function_evaluations: usize,
    pub jacobian_evaluations: usize,
    pub wall_time: Duration,
    /// `||H(x_k)||` for `k = 0..=nonlinear_iterations`.
    pub residual_history: Vec<f64>,
    /// Per-iteration line-search data (smoothing Newton only).
    pub steps: Vec<NewtonStep>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// `A x + F(x) = f` with `F(x)_i = phi_i(x_i)`.
#[derive(Clone, Debug)]
pub struct ModelProblem {
    pub a: SparseMatrix,
    pub f: Vec<f64>,
    pub phi: Vec<ScalarPiecewiseC2>,
}

/// Work is split across threads above this many unknowns.
const PAR_THRESHOLD: usize = 2048;

impl ModelProblem {
    pub fn new(a: SparseMatrix, f: Vec<f64>, phi: Vec<ScalarPiecewiseC2>) -> Result<Self, SolveError> {
        let n = a.n();
        if f.len() != n {
            return Err(SolveError::Dimension { expected: n, got: f.len() });
        }
        if phi.len() != n {
            return Err(SolveError::Dimension { expected: n, got: phi.len() });
        }
        if !a.is_symmetric(1e-12) {
            return Err(SolveError::NotSymmetric);
        }
        Ok(Self { a, f, phi })
    }

    pub fn n(&self) -> usize {
        self.f.len()
    }

    /// `F(x)`.
    pub fn nonlinear_term(&self, x: &[f64]) -> Vec<f64> {
        if self.n() >= PAR_THRESHOLD {
            self.phi.par_iter().zip(x.par_iter()).map(|(p, &xi)| p.value(xi)).collect()
        } else {
            self.phi.iter().zip(x).map(|(p, &xi)| p.value(xi)).collect()
        }
    }

    /// `H(x) = A x + F(x) - f`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.mul_vec(x);
        let fx = self.nonlinear_term(x);
        for i in 0..r.len() {
            r[i] += fx[i] - self.f[i];
        }
        r
    }

    pub fn residual_norm(&self, x: &[f64]) -> f64 {
        norm(&self.residual(x))
    }

    /// Largest Lipschitz bound among the nonlinearities.
    pub fn max_lipschitz(&self) -> f64 {
        self.phi.iter().map(|p| p.lipschitz_bound()).fold(0.0, f64::max)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solver selection with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum SolverChoice {
    SmoothingNewton(NewtonConfig),
    FixedPoint(FixedPointConfig),
    DualIteration(DualConfig),
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SmoothingNewton(_) => "smoothing-newton",
            Self::FixedPoint(_) => "fixed-point",
            Self::DualIteration(_) => "dual-iteration",
        }
    }

    pub fn tol(&self) -> f64 {
        match self {
            Self::SmoothingNewton(c) => c.tol,
            Self::FixedPoint(c) => c.tol,
            Self::DualIteration(c) => c.tol,
        }
    }

    pub fn solve(&self, mp: &ModelProblem, x0: &[f64]) -> Result<(Vec<f64>, SolveReport), SolveError> {
        match self {
            Self::SmoothingNewton(c) => smoothing_newton(mp, c, x0),
            Self::FixedPoint(c) => fixed_point(mp, c, x0),
            Self::DualIteration(c) => dual_iteration(mp, c, x0),
        }
    }
}

impl Default for SolverChoice {
    fn default() -> Self {
        Self::SmoothingNewton(NewtonConfig::default())
    }
}
