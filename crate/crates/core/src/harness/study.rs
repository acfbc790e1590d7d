use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{GridConfig, StudyConfig};
use super::{io_err, HarnessError};
use crate::fem::{error_norms, FeFunction, Mesh};
use crate::solver::{SolveReport, SolverChoice};
use crate::stepping::{StepError, Trajectory, TransientDriver, TransientProblem};

/// `log2(prev / cur)`, undefined when either error is zero or not finite.
pub fn convergence_order(prev: f64, cur: f64) -> Option<f64> {
    let r = (prev / cur).log2();
    (prev > 0.0 && cur > 0.0 && r.is_finite()).then_some(r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorRow {
    pub level: usize,
    pub n: usize,
    pub k: usize,
    pub l2: f64,
    pub l2_order: Option<f64>,
    pub h1: f64,
    pub h1_order: Option<f64>,
}

/// Errors and observed orders of one refinement sequence.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorTable {
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    /// Builds rows from `(n, k, l2, h1)` per level, filling in the orders.
    pub fn from_errors(errors: &[(usize, usize, f64, f64)]) -> Self {
        let rows = errors
            .iter()
            .enumerate()
            .map(|(level, &(n, k, l2, h1))| {
                let prev = level.checked_sub(1).map(|p| errors[p]);
                ErrorRow {
                    level,
                    n,
                    k,
                    l2,
                    l2_order: prev.and_then(|p| convergence_order(p.2, l2)),
                    h1,
                    h1_order: prev.and_then(|p| convergence_order(p.3, h1)),
                }
            })
            .collect();
        Self { rows }
    }

    pub fn l2_orders(&self) -> Vec<Option<f64>> {
        self.rows.iter().skip(1).map(|r| r.l2_order).collect()
    }

    pub fn h1_orders(&self) -> Vec<Option<f64>> {
        self.rows.iter().skip(1).map(|r| r.h1_order).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["level", "N", "K", "l2_error", "l2_order", "h1_error", "h1_order"])?;
        let order = |o: Option<f64>| o.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        for r in &self.rows {
            w.write_record([
                r.level.to_string(),
                r.n.to_string(),
                r.k.to_string(),
                format!("{:.6e}", r.l2),
                order(r.l2_order),
                format!("{:.6e}", r.h1),
                order(r.h1_order),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        let file = fs::File::create(path).map_err(io_err(path))?;
        self.write_csv(file)
    }
}

/// Final-time solutions stored on disk under a hash of their description.
#[derive(Clone, Debug, Default)]
pub struct ReferenceCache {
    dir: Option<PathBuf>,
}

impl ReferenceCache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn key(description: &str) -> String {
        let digest = Sha256::digest(description.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, description: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.ref", Self::key(description))))
    }

    /// Returns the cached vector or computes and stores it. Values are
    /// stored as raw bit patterns so a reload is exact.
    pub fn get_or_compute<F>(&self, description: &str, compute: F) -> Result<Vec<f64>, HarnessError>
    where
        F: FnOnce() -> Result<Vec<f64>, HarnessError>,
    {
        let Some(path) = self.path(description) else {
            return compute();
        };
        if let Ok(text) = fs::read_to_string(&path) {
            let mut lines = text.lines();
            if lines.next() == Some(description) {
                let parsed: Option<Vec<f64>> =
                    lines.map(|l| u64::from_str_radix(l, 16).ok().map(f64::from_bits)).collect();
                if let Some(v) = parsed {
                    return Ok(v);
                }
            }
        }
        let values = compute()?;
        let dir = path.parent().expect("cache file has a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut text = String::with_capacity(17 * values.len() + description.len() + 1);
        text.push_str(description);
        text.push('\n');
        for v in &values {
            text.push_str(&format!("{:016x}\n", v.to_bits()));
        }
        fs::write(&path, text).map_err(io_err(&path))?;
        Ok(values)
    }
}

fn final_solution(prob: TransientProblem, solver: &SolverChoice) -> Result<Vec<f64>, StepError> {
    Ok(TransientDriver::new(prob)?.run(solver, &[])?.final_state.u)
}

fn level_err(level: usize, n: usize, k: usize) -> impl FnOnce(StepError) -> HarnessError {
    move |source| HarnessError::Level { level, n, k, source }
}

fn reference<F>(
    factory: &F,
    grid: &GridConfig,
    solver: &SolverChoice,
    cache: &ReferenceCache,
    tag: &str,
) -> Result<(Mesh, Vec<f64>), HarnessError>
where
    F: Fn(usize, usize) -> Result<TransientProblem, HarnessError> + Sync,
{
    let (n, k) = (grid.n_ref, grid.k_ref);
    let prob = factory(n, k)?;
    let mesh = prob.mesh.clone();
    let description = format!("hysfem-reference v1 {tag} n={n} k={k} t={:?} solver={solver:?}", prob.t_final);
    let u = cache.get_or_compute(&description, || final_solution(prob, solver).map_err(|source| HarnessError::Reference { n, k, source }))?;
    Ok((mesh, u))
}

fn errors_against(
    ref_mesh: &Mesh,
    ref_u: &[f64],
    runs: Vec<(usize, usize, Mesh, Vec<f64>)>,
) -> Result<ErrorTable, HarnessError> {
    let fine = FeFunction::new(ref_mesh, ref_u)?;
    let mut errors = Vec::with_capacity(runs.len());
    for (n, k, mesh, u) in &runs {
        let e = error_norms(&fine, &FeFunction::new(mesh, u)?)?;
        errors.push((*n, *k, e.l2, e.h1));
    }
    Ok(ErrorTable::from_errors(&errors))
}

/// Spatial study: `N = n_init 2^r`, `r = 0..=r_h`, at the reference step.
///
/// `factory(n, k)` builds the problem on an `n`-per-side mesh with `k` steps;
/// `tag` identifies the problem family in the cache key.
pub fn run_h_study_with<F>(
    factory: &F,
    grid: &GridConfig,
    solver: &SolverChoice,
    cache: &ReferenceCache,
    tag: &str,
) -> Result<ErrorTable, HarnessError>
where
    F: Fn(usize, usize) -> Result<TransientProblem, HarnessError> + Sync,
{
    grid.validate()?;
    let (ref_mesh, ref_u) = reference(factory, grid, solver, cache, tag)?;
    let runs = (0..=grid.r_h)
        .into_par_iter()
        .map(|r| {
            let (n, k) = (grid.n_init << r, grid.k_ref);
            let prob = factory(n, k)?;
            let mesh = prob.mesh.clone();
            let u = final_solution(prob, solver).map_err(level_err(r, n, k))?;
            Ok((n, k, mesh, u))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    errors_against(&ref_mesh, &ref_u, runs)
}

/// Temporal study: `K = k_init 2^r`, `r = 0..=r_tau`, on the reference mesh.
pub fn run_tau_study_with<F>(
    factory: &F,
    grid: &GridConfig,
    solver: &SolverChoice,
    cache: &ReferenceCache,
    tag: &str,
) -> Result<ErrorTable, HarnessError>
where
    F: Fn(usize, usize) -> Result<TransientProblem, HarnessError> + Sync,
{
    grid.validate()?;
    let (ref_mesh, ref_u) = reference(factory, grid, solver, cache, tag)?;
    let runs = (0..=grid.r_tau)
        .into_par_iter()
        .map(|r| {
            let (n, k) = (grid.n_ref, grid.k_init << r);
            let prob = factory(n, k)?;
            let mesh = prob.mesh.clone();
            let u = final_solution(prob, solver).map_err(level_err(r, n, k))?;
            Ok((n, k, mesh, u))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    errors_against(&ref_mesh, &ref_u, runs)
}

fn case_tag(cfg: &StudyConfig) -> String {
    format!("case{}", cfg.case.number())
}

pub fn run_h_study(cfg: &StudyConfig) -> Result<ErrorTable, HarnessError> {
    cfg.validate()?;
    let factory = |n, k| cfg.problem(n, k);
    let cache = ReferenceCache::new(cfg.cache_dir.clone());
    run_h_study_with(&factory, &cfg.grid, &cfg.solver.choice()?, &cache, &case_tag(cfg))
}

pub fn run_tau_study(cfg: &StudyConfig) -> Result<ErrorTable, HarnessError> {
    cfg.validate()?;
    let factory = |n, k| cfg.problem(n, k);
    let cache = ReferenceCache::new(cfg.cache_dir.clone());
    run_tau_study_with(&factory, &cfg.grid, &cfg.solver.choice()?, &cache, &case_tag(cfg))
}

/// Runs one case at the `[run]` resolution (default: the coarsest grid) and
/// returns the mesh with the trajectory.
pub fn run_case(cfg: &StudyConfig) -> Result<(TransientDriver, Trajectory), HarnessError> {
    cfg.validate()?;
    let (n, k, snaps) = match &cfg.run {
        Some(r) => (r.n, r.k, r.snapshots.clone()),
        None => (cfg.grid.n_init, cfg.grid.k_init, Vec::new()),
    };
    let driver = TransientDriver::new(cfg.problem(n, k)?)?;
    let traj = driver.run(&cfg.solver.choice()?, &snaps)?;
    Ok((driver, traj))
}

/// One CSV row per step: counters and final residual of its solve.
pub fn write_step_reports<W: Write>(reports: &[SolveReport], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "step",
        "nonlinear_its",
        "linear_its",
        "func_evals",
        "jac_evals",
        "wall_time_s",
        "final_residual",
    ])?;
    for (i, r) in reports.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            r.nonlinear_iterations.to_string(),
            r.linear_iterations.to_string(),
            r.function_evaluations.to_string(),
            r.jacobian_evaluations.to_string(),
            format!("{:.6}", r.wall_time.as_secs_f64()),
            format!("{:.6e}", r.final_residual()),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_follow_log2_ratio() {
        let t = ErrorTable::from_errors(&[(4, 8, 0.4, 2.0), (8, 8, 0.1, 1.0), (16, 8, 0.0, 0.5)]);
        assert_eq!(t.rows[0].l2_order, None);
        assert_eq!(t.rows[1].l2_order, Some(2.0));
        assert_eq!(t.rows[1].h1_order, Some(1.0));
        assert_eq!(t.rows[2].l2_order, None);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "level,N,K,l2_error,l2_order,h1_error,h1_order\n\
             0,4,8,4.000000e-1,-,2.000000e0,-\n\
             1,8,8,1.000000e-1,2.0000,1.000000e0,1.0000\n\
             2,16,8,0.000000e0,-,5.000000e-1,1.0000\n"
        );
    }

    #[test]
    fn cache_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ReferenceCache::new(Some(dir.path().to_path_buf()));
        let v = vec![0.1, -3.5e-300, f64::MIN_POSITIVE, 1.0 / 3.0];
        let first = cache.get_or_compute("demo", || Ok(v.clone())).unwrap();
        let second = cache.get_or_compute("demo", || panic!("must hit the cache")).unwrap();
        assert_eq!(first, second);
        assert_eq!(ReferenceCache::key("demo").len(), 64);
    }
}
