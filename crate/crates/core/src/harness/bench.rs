use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use super::config::BenchConfig;
use super::svg::{Plot, Series};
use super::{io_err, HarnessError};
use crate::fem::Mesh;
use crate::hysteresis::{PreisachInit, PreisachParams};
use crate::solver::{NewtonConfig, SolverChoice};
use crate::stepping::{zero_space, zero_space_time, HysteresisSpec, ProblemKind, TransientDriver, TransientProblem};

/// Cost of one solver on the matched step.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub solver: String,
    pub converged: bool,
    pub wall_time: Duration,
    pub nonlinear_iterations: usize,
    pub linear_iterations: usize,
    pub function_evaluations: usize,
    pub jacobian_evaluations: usize,
    pub residual_history: Vec<f64>,
    /// Free-node solution when the solver converged.
    pub solution: Option<Vec<f64>>,
}

/// Nonlinear iterations per step of a full transient run.
#[derive(Clone, Debug, PartialEq)]
pub struct StepCounts {
    pub solver: String,
    /// `None` from the first failing step on.
    pub nonlinear_iterations: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub matched_step: usize,
    pub rows: Vec<BenchRow>,
    pub transient: Vec<StepCounts>,
}

impl BenchReport {
    pub fn row(&self, solver: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.solver == solver)
    }

    /// Largest nodal difference between any two converged solutions.
    pub fn max_disagreement(&self) -> Option<f64> {
        let sols: Vec<&Vec<f64>> = self.rows.iter().filter_map(|r| r.solution.as_ref()).collect();
        if sols.len() < 2 {
            return None;
        }
        let mut worst: f64 = 0.0;
        for a in &sols {
            for b in &sols {
                for (x, y) in a.iter().zip(b.iter()) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        Some(worst)
    }
}

/// The 3D quasilinear Preisach problem of the solver comparison.
pub fn bench_problem(cfg: &BenchConfig) -> Result<TransientProblem, HarnessError> {
    let params = PreisachParams::lorentzian_benchmark(cfg.preisach_nodes)?;
    let (amp, freq) = (cfg.source_amplitude, cfg.source_frequency);
    Ok(TransientProblem {
        kind: ProblemKind::Quasilinear,
        mesh: Mesh::uniform(3, cfg.n)?,
        t_final: cfg.t_final,
        k_steps: cfg.k_steps,
        source: Arc::new(move |_, t| amp * (freq * t).sin()),
        boundary: zero_space_time(),
        initial: zero_space(),
        hysteresis: HysteresisSpec::Preisach { init: PreisachInit::demagnetized(params.len()), params },
    })
}

pub fn bench_solvers(cfg: &BenchConfig) -> Result<BenchReport, HarnessError> {
    cfg.validate()?;
    let choices: Vec<SolverChoice> = cfg.solvers.iter().map(|s| s.choice()).collect::<Result<_, _>>()?;
    let driver = TransientDriver::new(bench_problem(cfg)?)?;
    let tol = choices.iter().map(|c| c.tol()).fold(f64::INFINITY, f64::min);
    let lead = SolverChoice::SmoothingNewton(NewtonConfig { tol, ..Default::default() });

    let mut state = driver.initial_state()?;
    while state.step + 1 < cfg.matched_step {
        state = driver.advance(&state, &lead)?.0;
    }
    let system = driver.build_step_system(&state)?;
    let x0: Vec<f64> = system.free.iter().map(|&i| state.u[i]).collect();
    let rows = choices
        .iter()
        .map(|c| match c.solve(&system.problem, &x0) {
            Ok((x, rep)) => BenchRow {
                solver: c.name().to_string(),
                converged: true,
                wall_time: rep.wall_time,
                nonlinear_iterations: rep.nonlinear_iterations,
                linear_iterations: rep.linear_iterations,
                function_evaluations: rep.function_evaluations,
                jacobian_evaluations: rep.jacobian_evaluations,
                residual_history: rep.residual_history,
                solution: Some(x),
            },
            Err(e) => {
                let rep = e.report().cloned().unwrap_or_default();
                BenchRow {
                    solver: c.name().to_string(),
                    converged: false,
                    wall_time: rep.wall_time,
                    nonlinear_iterations: rep.nonlinear_iterations,
                    linear_iterations: rep.linear_iterations,
                    function_evaluations: rep.function_evaluations,
                    jacobian_evaluations: rep.jacobian_evaluations,
                    residual_history: rep.residual_history,
                    solution: None,
                }
            }
        })
        .collect();

    let mut transient = Vec::new();
    if cfg.full_transient {
        for c in &choices {
            let mut counts = vec![None; cfg.k_steps];
            let mut s = driver.initial_state()?;
            for slot in counts.iter_mut() {
                match driver.advance(&s, c) {
                    Ok((next, rep)) => {
                        *slot = Some(rep.nonlinear_iterations);
                        s = next;
                    }
                    Err(_) => break,
                }
            }
            transient.push(StepCounts { solver: c.name().to_string(), nonlinear_iterations: counts });
        }
    }
    Ok(BenchReport { matched_step: cfg.matched_step, rows, transient })
}

fn csv_file(path: &Path) -> Result<csv::Writer<fs::File>, HarnessError> {
    Ok(csv::Writer::from_writer(fs::File::create(path).map_err(io_err(path))?))
}

/// Writes `bench.csv`, `bench_residuals.csv`, `bench_residuals.svg` and,
/// after a full transient run, `bench_transient.csv` and `.svg`.
pub fn write_bench_outputs(report: &BenchReport, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();

    let path = dir.join("bench.csv");
    let mut w = csv_file(&path)?;
    w.write_record([
        "solver",
        "status",
        "time_s",
        "nonlinear_its",
        "linear_its",
        "func_evals",
        "jac_evals",
        "final_residual",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.solver.clone(),
            if r.converged { "ok" } else { "DNF" }.to_string(),
            format!("{:.4}", r.wall_time.as_secs_f64()),
            r.nonlinear_iterations.to_string(),
            r.linear_iterations.to_string(),
            r.function_evaluations.to_string(),
            r.jacobian_evaluations.to_string(),
            format!("{:.6e}", r.residual_history.last().copied().unwrap_or(f64::NAN)),
        ])?;
    }
    w.flush().map_err(io_err(&path))?;
    written.push(path);

    let path = dir.join("bench_residuals.csv");
    let mut w = csv_file(&path)?;
    w.write_record(["solver", "iteration", "residual"])?;
    for r in &report.rows {
        for (i, v) in r.residual_history.iter().enumerate() {
            w.write_record([r.solver.clone(), i.to_string(), format!("{v:.6e}")])?;
        }
    }
    w.flush().map_err(io_err(&path))?;
    written.push(path);

    let plot = Plot {
        title: format!("Residual at step {}", report.matched_step),
        x_label: "iteration".into(),
        y_label: "||H(x)||".into(),
        log_y: true,
        series: report
            .rows
            .iter()
            .map(|r| {
                let pts = r.residual_history.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
                Series::line(r.solver.clone(), pts)
            })
            .collect(),
    };
    let path = dir.join("bench_residuals.svg");
    fs::write(&path, plot.render()).map_err(io_err(&path))?;
    written.push(path);

    if !report.transient.is_empty() {
        let path = dir.join("bench_transient.csv");
        let mut w = csv_file(&path)?;
        w.write_record(["solver", "step", "nonlinear_its"])?;
        for c in &report.transient {
            for (k, n) in c.nonlinear_iterations.iter().enumerate() {
                w.write_record([c.solver.clone(), (k + 1).to_string(), n.map_or("DNF".into(), |v| v.to_string())])?;
            }
        }
        w.flush().map_err(io_err(&path))?;
        written.push(path);

        let plot = Plot {
            title: "Outer iterations per step".into(),
            x_label: "step".into(),
            y_label: "nonlinear iterations".into(),
            log_y: false,
            series: report
                .transient
                .iter()
                .map(|c| {
                    let pts = c
                        .nonlinear_iterations
                        .iter()
                        .enumerate()
                        .filter_map(|(k, n)| n.map(|v| ((k + 1) as f64, v as f64)))
                        .collect();
                    Series::line(c.solver.clone(), pts)
                })
                .collect(),
        };
        let path = dir.join("bench_transient.svg");
        fs::write(&path, plot.render()).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
