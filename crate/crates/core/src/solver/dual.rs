use std::time::Instant;

use rayon::prelude::*;

use super::linear::{pcg, LINEAR_TOL};
use super::{ModelProblem, SolveError, SolveReport, PAR_THRESHOLD};
use crate::piecewise::ScalarPiecewiseC2;

/// Parameters of the dual (multiplier) iteration with shift `beta` and
/// resolvent parameter `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualConfig {
    pub beta: f64,
    pub lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub linear_tol: f64,
}

impl Default for DualConfig {
    fn default() -> Self {
        Self { beta: 0.0, lambda: 1.0, tol: 1e-11, max_iter: 1000, linear_tol: LINEAR_TOL }
    }
}

/// Solves `(1 - lambda beta) z + lambda phi(z) = y`.
///
/// The root is bracketed from the monotonicity bound, narrowed across kinks
/// by bisection on the kink list, then polished on the remaining smooth
/// piece with safeguarded Newton steps.
pub fn resolvent(phi: &ScalarPiecewiseC2, y: f64, lambda: f64, beta: f64) -> Result<f64, SolveError> {
    let s = 1.0 - lambda * beta;
    let psi = |z: f64| s * z + lambda * phi.value(z) - y;
    let z0 = y / s;
    let g0 = psi(z0);
    if g0 == 0.0 {
        return Ok(z0);
    }
    if !g0.is_finite() {
        return Err(SolveError::Resolvent { y });
    }
    // psi' >= s, so the root is within |g0| / s of z0.
    let reach = g0.abs() / s;
    let (mut lo, mut hi) = if g0 > 0.0 { (z0 - reach, z0) } else { (z0, z0 + reach) };
    let kinks = phi.kinks();
    let (mut i0, mut i1) = (kinks.partition_point(|&k| k <= lo), kinks.partition_point(|&k| k < hi));
    while i0 < i1 {
        let mid = (i0 + i1) / 2;
        let k = kinks[mid];
        let v = psi(k);
        if v == 0.0 {
            return Ok(k);
        }
        if v > 0.0 {
            hi = k;
            i1 = mid;
        } else {
            lo = k;
            i0 = mid + 1;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let jet = phi.eval(z);
        let v = s * z + lambda * jet.value - y;
        if v == 0.0 {
            return Ok(z);
        }
        if v > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let der = s + lambda * jet.d1;
        let mut next = z - v / der;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - z).abs() <= 1e-15 * (1.0 + z.abs()) || hi - lo <= 1e-14 * (1.0 + z.abs());
        z = next;
        if done {
            return Ok(z);
        }
    }
    Err(SolveError::Resolvent { y })
}

pub fn dual_iteration(
    mp: &ModelProblem,
    cfg: &DualConfig,
    x0: &[f64],
) -> Result<(Vec<f64>, SolveReport), SolveError> {
    if !(cfg.lambda > 0.0 && cfg.beta >= 0.0 && 1.0 - cfg.lambda * cfg.beta > 0.0) {
        return Err(SolveError::Config("need lambda > 0, beta >= 0 and lambda beta < 1".into()));
    }
    if x0.len() != mp.n() {
        return Err(SolveError::Dimension { expected: mp.n(), got: x0.len() });
    }
    let (lambda, beta) = (cfg.lambda, cfg.beta);
    let start = Instant::now();
    let mut report = SolveReport::default();
    let shifted = mp.a.with_added_diagonal(&vec![beta; mp.n()]).expect("sizes agree");
    let mut u = x0.to_vec();
    let residual = |u: &[f64]| mp.residual_norm(u);
    report.residual_history.push(residual(&u));
    report.function_evaluations += 1;
    // Multiplier starts at the shifted nonlinearity of the initial guess.
    let mut q: Vec<f64> = mp.nonlinear_term(&u).iter().zip(&u).map(|(f, ui)| f - beta * ui).collect();
    while report.final_residual() > cfg.tol {
        if report.nonlinear_iterations >= cfg.max_iter || !report.final_residual().is_finite() {
            report.wall_time = start.elapsed();
            return Err(SolveError::MaxIterations { solver: "dual-iteration", report: Box::new(report) });
        }
        // Solve for the increment so the inner tolerance tracks the change.
        let su = shifted.mul_vec(&u);
        let rhs: Vec<f64> = (0..mp.n()).map(|i| mp.f[i] - q[i] - su[i]).collect();
        let mut d = vec![0.0; mp.n()];
        report.linear_iterations += pcg(&shifted, &rhs, &mut d, cfg.linear_tol)?;
        u.iter_mut().zip(&d).for_each(|(ui, di)| *ui += di);
        let update = |((p, &ui), &qi): ((&ScalarPiecewiseC2, &f64), &f64)| {
            let y = ui + lambda * qi;
            resolvent(p, y, lambda, beta).map(|z| (y - z) / lambda)
        };
        q = if mp.n() >= PAR_THRESHOLD {
            mp.phi.par_iter().zip(u.par_iter()).zip(q.par_iter()).map(update).collect::<Result<_, _>>()?
        } else {
            mp.phi.iter().zip(&u).zip(&q).map(update).collect::<Result<_, _>>()?
        };
        report.function_evaluations += 2;
        report.nonlinear_iterations += 1;
        report.residual_history.push(residual(&u));
    }
    report.wall_time = start.elapsed();
    Ok((u, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::SparseMatrix;
    use crate::hysteresis::{play_level_function, PlayParams};
    use crate::piecewise::Jet;

    fn relu() -> ScalarPiecewiseC2 {
        ScalarPiecewiseC2::from_fns(
            vec![0.0],
            vec![Box::new(|_| Jet::constant(0.0)), Box::new(|x| Jet::new(x, 1.0, 0.0))],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn relu_resolvent() {
        let p = relu();
        for &y in &[-3.0, -0.1, 0.0, 0.4, 7.0] {
            let z = resolvent(&p, y, 1.0, 0.0).unwrap();
            let expect = if y >= 0.0 { y / 2.0 } else { y };
            assert!((z - expect).abs() < 1e-15, "y={y}");
        }
    }

    #[test]
    fn play_resolvent_solves_equation() {
        let p = play_level_function(0.3, &PlayParams::new(-0.5, 0.5, 2.0).unwrap(), 0.7);
        for i in 0..200 {
            let y = -5.0 + 0.05 * i as f64;
            let z = resolvent(&p, y, 0.8, 0.5).unwrap();
            let r = (1.0 - 0.4) * z + 0.8 * p.value(z) - y;
            assert!(r.abs() < 1e-13, "y={y} r={r}");
        }
    }

    #[test]
    fn linear_problem_and_scalar_solution() {
        let mp = ModelProblem::new(SparseMatrix::identity(1), vec![1.0], vec![ScalarPiecewiseC2::affine(0.0, 0.0)]).unwrap();
        let (u, rep) = dual_iteration(&mp, &DualConfig::default(), &[0.0]).unwrap();
        assert_eq!(rep.nonlinear_iterations, 1);
        assert_eq!(u, vec![1.0]);
        let mp = ModelProblem::new(SparseMatrix::identity(1), vec![1.0], vec![relu()]).unwrap();
        let (u, _) = dual_iteration(&mp, &DualConfig { tol: 1e-13, ..Default::default() }, &[0.0]).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-12);
        assert!(mp.residual_norm(&u) < 1e-13);
    }
}
