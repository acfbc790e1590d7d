//! Experiment drivers: convergence studies, the solver comparison, the
//! scalar Preisach loop and their CSV/SVG output.

mod bench;
mod config;
mod demo;
mod study;
pub mod svg;

pub use bench::{bench_problem, bench_solvers, write_bench_outputs, BenchReport, BenchRow, StepCounts};
pub use config::{
    load_toml, output_root, BenchConfig, CaseId, GridConfig, PreisachDemoConfig, RunConfig, SolverConfig, SolverKind,
    StudyConfig, OUTPUT_ROOT_VAR,
};
pub use demo::{excitation, preisach_demo, write_demo_outputs, DemoSample, PreisachDemoReport};
pub use study::{
    convergence_order, run_case, run_h_study, run_tau_study, run_h_study_with, run_tau_study_with, write_step_reports,
    ErrorRow, ErrorTable, ReferenceCache,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::fem::FemError;
use crate::hysteresis::HysteresisError;
use crate::solver::SolveError;
use crate::stepping::StepError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read config {}", path.display())]
    ReadConfig {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {}: {message}", path.display())]
    ParseConfig { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("reference solve (N = {n}, K = {k})")]
    Reference {
        n: usize,
        k: usize,
        #[source]
        source: StepError,
    },
    #[error("level {level} (N = {n}, K = {k})")]
    Level {
        level: usize,
        n: usize,
        k: usize,
        #[source]
        source: StepError,
    },
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Hysteresis(#[from] HysteresisError),
    #[error("{}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}
