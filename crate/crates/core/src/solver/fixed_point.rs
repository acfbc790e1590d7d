use std::time::Instant;

use super::linear::{pcg, LINEAR_TOL};
use super::{norm, ModelProblem, SolveError, SolveReport};

/// Parameters of the shifted fixed-point iteration
/// `(A + beta I) u_{n+1} = f - F(u_n) + beta u_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointConfig {
    pub beta: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub linear_tol: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { beta: 0.0, tol: 1e-11, max_iter: 1000, linear_tol: LINEAR_TOL }
    }
}

pub fn fixed_point(
    mp: &ModelProblem,
    cfg: &FixedPointConfig,
    x0: &[f64],
) -> Result<(Vec<f64>, SolveReport), SolveError> {
    if !(cfg.beta >= 0.0) {
        return Err(SolveError::Config("beta must be nonnegative".into()));
    }
    if x0.len() != mp.n() {
        return Err(SolveError::Dimension { expected: mp.n(), got: x0.len() });
    }
    let start = Instant::now();
    let mut report = SolveReport::default();
    // The shifted matrix is built once and reused.
    let shifted = mp.a.with_added_diagonal(&vec![cfg.beta; mp.n()]).expect("sizes agree");
    let mut u = x0.to_vec();
    let mut fu = mp.nonlinear_term(&u);
    report.function_evaluations += 1;
    let residual = |u: &[f64], fu: &[f64]| {
        let au = mp.a.mul_vec(u);
        norm(&au.iter().zip(fu).zip(&mp.f).map(|((a, b), c)| a + b - c).collect::<Vec<_>>())
    };
    report.residual_history.push(residual(&u, &fu));
    while report.final_residual() > cfg.tol {
        if report.nonlinear_iterations >= cfg.max_iter || !report.final_residual().is_finite() {
            report.wall_time = start.elapsed();
            return Err(SolveError::MaxIterations { solver: "fixed-point", report: Box::new(report) });
        }
        // Increment form: (A + beta I) d = -H(u), so the inner tolerance is
        // relative to the current residual rather than to f.
        let au = mp.a.mul_vec(&u);
        let rhs: Vec<f64> = (0..mp.n()).map(|i| mp.f[i] - fu[i] - au[i]).collect();
        let mut d = vec![0.0; mp.n()];
        report.linear_iterations += pcg(&shifted, &rhs, &mut d, cfg.linear_tol)?;
        u.iter_mut().zip(&d).for_each(|(ui, di)| *ui += di);
        fu = mp.nonlinear_term(&u);
        report.function_evaluations += 1;
        report.nonlinear_iterations += 1;
        report.residual_history.push(residual(&u, &fu));
    }
    report.wall_time = start.elapsed();
    Ok((u, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::SparseMatrix;
    use crate::piecewise::{Jet, ScalarPiecewiseC2};

    #[test]
    fn hand_iteration() {
        let relu = ScalarPiecewiseC2::from_fns(
            vec![0.0],
            vec![Box::new(|_| Jet::constant(0.0)), Box::new(|x| Jet::new(x, 1.0, 0.0))],
            1.0,
        )
        .unwrap();
        let mp = ModelProblem::new(SparseMatrix::identity(1), vec![1.0], vec![relu]).unwrap();
        let cfg = FixedPointConfig { beta: 1.0, tol: 1e-14, ..Default::default() };
        let (u, rep) = fixed_point(&mp, &cfg, &[0.0]).unwrap();
        assert_eq!(u, vec![0.5]);
        assert_eq!(rep.nonlinear_iterations, 1);
        assert_eq!(rep.residual_history, vec![1.0, 0.0]);
    }

    #[test]
    fn linear_problem_converges_at_once() {
        let a = SparseMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let mp = ModelProblem::new(a, vec![1.0, 1.0], vec![ScalarPiecewiseC2::affine(0.0, 0.0); 2]).unwrap();
        let (u, rep) = fixed_point(&mp, &FixedPointConfig::default(), &[0.0, 0.0]).unwrap();
        assert_eq!(rep.nonlinear_iterations, 1);
        assert!((u[0] - 1.0).abs() < 1e-12 && (u[1] - 1.0).abs() < 1e-12);
    }
}
