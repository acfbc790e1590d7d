use std::time::Instant;

use rayon::prelude::*;

use super::linear::{pcg, LINEAR_TOL};
use super::smoothing::SmoothedNonlinearity;
use super::{norm, ModelProblem, SolveError, SolveReport, PAR_THRESHOLD};
use crate::fem::SparseMatrix;

/// Parameters of the Jacobian smoothing Newton method.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Backtracking factor of the line search.
    pub rho: f64,
    pub alpha: f64,
    /// Required residual reduction factor before the smoothing level drops.
    pub eta: f64,
    /// Allowed Jacobian mismatch relative to the residual.
    pub gamma: f64,
    /// Armijo constant, must lie in `(0, (1 - alpha) / 2)`.
    pub sigma: f64,
    /// Bound on `||H~(x, eps) - H(x)|| / eps`.
    pub mu: f64,
    /// Stop once `||H(x)|| <= tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub linear_tol: f64,
    /// Keep every iterate in the report (for diagnostics).
    pub record_iterates: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            rho: 0.1,
            alpha: 0.1,
            eta: 0.1,
            gamma: 10.0,
            sigma: 1e-4,
            mu: 100.0,
            tol: 1e-11,
            max_iter: 100,
            linear_tol: LINEAR_TOL,
            record_iterates: false,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let unit = |v: f64| v > 0.0 && v < 1.0;
        let bad = |m: &str| Err(SolveError::Config(m.to_string()));
        if !unit(self.rho) || !unit(self.alpha) || !unit(self.eta) {
            return bad("rho, alpha and eta must lie in (0, 1)");
        }
        if !(self.gamma > 0.0) || !(self.mu > 0.0) {
            return bad("gamma and mu must be positive");
        }
        if !(self.sigma > 0.0 && self.sigma < 0.5 * (1.0 - self.alpha)) {
            return bad("sigma must lie in (0, (1 - alpha) / 2)");
        }
        if !(self.tol >= 0.0) || self.max_iter == 0 {
            return bad("tol must be nonnegative and max_iter positive");
        }
        Ok(())
    }
}

/// What happened in one Newton iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonStep {
    /// Smoothing level used for the step.
    pub eps: f64,
    pub step_length: f64,
    pub backtracks: usize,
    /// `theta_k(x_k)` and `theta_k(x_k + t d)`.
    pub smoothed_merit_before: f64,
    pub smoothed_merit_after: f64,
    /// `theta(x_k) = ||H(x_k)||^2 / 2`.
    pub merit: f64,
    /// Whether the smoothing level was lowered after the step.
    pub eps_lowered: bool,
    pub iterate: Option<Vec<f64>>,
}

struct Smoothed {
    values: Vec<f64>,
    derivs: Vec<f64>,
}

fn smoothed_terms(mp: &ModelProblem, x: &[f64], eps: f64) -> Result<Smoothed, SolveError> {
    let eval = |(p, &xi): (&crate::piecewise::ScalarPiecewiseC2, &f64)| {
        SmoothedNonlinearity::new(p.clone(), eps).eval(xi)
    };
    let pairs: Vec<(f64, f64)> = if mp.n() >= PAR_THRESHOLD {
        mp.phi.par_iter().zip(x.par_iter()).map(eval).collect::<Result<_, _>>()?
    } else {
        mp.phi.iter().zip(x).map(eval).collect::<Result<_, _>>()?
    };
    let (values, derivs) = pairs.into_iter().unzip();
    Ok(Smoothed { values, derivs })
}

fn smoothed_residual(mp: &ModelProblem, x: &[f64], s: &Smoothed) -> Vec<f64> {
    let mut r = mp.a.mul_vec(x);
    for i in 0..r.len() {
        r[i] += s.values[i] - mp.f[i];
    }
    r
}

fn derivative_gap_norm(mp: &ModelProblem, x: &[f64], eps: f64) -> Result<f64, SolveError> {
    let gap = |(p, &xi): (&crate::piecewise::ScalarPiecewiseC2, &f64)| {
        SmoothedNonlinearity::new(p.clone(), eps).derivative_gap(xi).map(|g| g * g)
    };
    let sq: Vec<f64> = if mp.n() >= PAR_THRESHOLD {
        mp.phi.par_iter().zip(x.par_iter()).map(gap).collect::<Result<_, _>>()?
    } else {
        mp.phi.iter().zip(x).map(gap).collect::<Result<_, _>>()?
    };
    Ok(sq.iter().sum::<f64>().sqrt())
}

/// `A + diag(phi~'(x, eps))`.
pub fn newton_matrix(mp: &ModelProblem, x: &[f64], eps: f64) -> Result<SparseMatrix, SolveError> {
    let s = smoothed_terms(mp, x, eps)?;
    Ok(mp.a.with_added_diagonal(&s.derivs).expect("sizes agree"))
}

const MAX_BACKTRACKS: usize = 60;
const MAX_HALVINGS: usize = 60;

/// Jacobian smoothing Newton method with arc-smoothed nonlinearities.
pub fn smoothing_newton(
    mp: &ModelProblem,
    cfg: &NewtonConfig,
    x0: &[f64],
) -> Result<(Vec<f64>, SolveReport), SolveError> {
    cfg.validate()?;
    if x0.len() != mp.n() {
        return Err(SolveError::Dimension { expected: mp.n(), got: x0.len() });
    }
    let start = Instant::now();
    let mut report = SolveReport::default();
    let mut x = x0.to_vec();
    let mut h = mp.residual(&x);
    report.function_evaluations += 1;
    let mut h_norm = norm(&h);
    report.residual_history.push(h_norm);
    let mut beta = h_norm;
    let mut eps = cfg.alpha * beta / (2.0 * cfg.mu);
    // Smoothed terms at (x, eps) when already known from the line search.
    let mut cached: Option<Smoothed> = None;

    while h_norm > cfg.tol {
        if report.nonlinear_iterations >= cfg.max_iter {
            report.wall_time = start.elapsed();
            return Err(SolveError::MaxIterations { solver: "smoothing-newton", report: Box::new(report) });
        }
        let s = match cached.take() {
            Some(s) => s,
            None => {
                report.function_evaluations += 1;
                smoothed_terms(mp, &x, eps)?
            }
        };
        report.jacobian_evaluations += 1;
        let jac = mp.a.with_added_diagonal(&s.derivs).expect("sizes agree");
        let rhs: Vec<f64> = h.iter().map(|v| -v).collect();
        let mut d = vec![0.0; mp.n()];
        report.linear_iterations += pcg(&jac, &rhs, &mut d, cfg.linear_tol)?;

        let theta = 0.5 * h_norm * h_norm;
        let theta_k = 0.5 * norm(&smoothed_residual(mp, &x, &s)).powi(2);
        let mut t = 1.0;
        let mut accepted = None;
        for m in 0..=MAX_BACKTRACKS {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            report.function_evaluations += 1;
            let st = smoothed_terms(mp, &trial, eps)?;
            let theta_trial = 0.5 * norm(&smoothed_residual(mp, &trial, &st)).powi(2);
            if theta_trial - theta_k <= -2.0 * cfg.sigma * t * theta {
                accepted = Some((m, trial, st, theta_trial));
                break;
            }
            t *= cfg.rho;
        }
        let Some((backtracks, x_next, s_next, theta_after)) = accepted else {
            report.wall_time = start.elapsed();
            return Err(SolveError::LineSearch { backtracks: MAX_BACKTRACKS, report: Box::new(report) });
        };

        x = x_next;
        h = mp.residual(&x);
        report.function_evaluations += 1;
        h_norm = norm(&h);
        report.nonlinear_iterations += 1;
        report.residual_history.push(h_norm);

        let mismatch = {
            let fx = mp.nonlinear_term(&x);
            norm(&fx.iter().zip(&s_next.values).map(|(a, b)| a - b).collect::<Vec<_>>())
        };
        let step_eps = eps;
        let lower = h_norm > 0.0 && h_norm <= (cfg.eta * beta).max(mismatch / cfg.alpha);
        if lower {
            beta = h_norm;
            let mut candidate = (cfg.alpha * beta / (2.0 * cfg.mu)).min(eps / 2.0);
            let mut halvings = 0;
            loop {
                report.jacobian_evaluations += 1;
                if derivative_gap_norm(mp, &x, candidate)? <= cfg.gamma * beta {
                    break;
                }
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(SolveError::SmoothingLevel { halvings: MAX_HALVINGS });
                }
                candidate *= 0.5;
            }
            eps = candidate;
        } else {
            cached = Some(s_next);
        }
        report.steps.push(NewtonStep {
            eps: step_eps,
            step_length: t,
            backtracks,
            smoothed_merit_before: theta_k,
            smoothed_merit_after: theta_after,
            merit: theta,
            eps_lowered: lower,
            iterate: cfg.record_iterates.then(|| x.clone()),
        });
    }
    report.wall_time = start.elapsed();
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::piecewise::{Jet, ScalarPiecewiseC2};

    fn relu() -> ScalarPiecewiseC2 {
        ScalarPiecewiseC2::from_fns(
            vec![0.0],
            vec![Box::new(|_| Jet::constant(0.0)), Box::new(|x| Jet::new(x, 1.0, 0.0))],
            1.0,
        )
        .unwrap()
    }

    fn scalar(f: f64) -> ModelProblem {
        ModelProblem::new(SparseMatrix::identity(1), vec![f], vec![relu()]).unwrap()
    }

    #[test]
    fn scalar_examples() {
        let cfg = NewtonConfig { tol: 1e-14, ..Default::default() };
        let (x, rep) = smoothing_newton(&scalar(1.0), &cfg, &[0.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-14);
        assert_eq!(rep.residual_history.len(), rep.nonlinear_iterations + 1);
        let (x, _) = smoothing_newton(&scalar(-1.0), &cfg, &[0.0]).unwrap();
        assert!((x[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn config_validation() {
        let cfg = NewtonConfig { sigma: 0.46, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = NewtonConfig { rho: 1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(NewtonConfig::default().validate().is_ok());
    }
}
