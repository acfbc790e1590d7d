use super::SolveError;
use crate::fem::SparseMatrix;

/// Default relative residual tolerance of the inner linear solves.
pub const LINEAR_TOL: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients from the initial guess in `x`.
///
/// Stops when `||b - A x|| <= tol ||b||` and returns the iteration count.
pub fn pcg(a: &SparseMatrix, b: &[f64], x: &mut [f64], tol: f64) -> Result<usize, SolveError> {
    let n = a.n();
    if b.len() != n || x.len() != n {
        return Err(SolveError::Dimension { expected: n, got: b.len().min(x.len()) });
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = a.mul_vec(x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let target = tol * bnorm;
    if dot(&r, &r).sqrt() <= target {
        return Ok(0);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = 20 * n + 100;
    for it in 1..=max_iter {
        a.spmv(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(SolveError::NotPositiveDefinite { curvature: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = dot(&r, &r).sqrt();
        if rnorm <= target {
            return Ok(it);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolveError::LinearSolver { iterations: max_iter, residual: dot(&r, &r).sqrt() / bnorm })
}

/// Solves `A x = b` from a zero initial guess.
pub fn spd_solve(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, usize), SolveError> {
    let mut x = vec![0.0; a.n()];
    let it = pcg(a, b, &mut x, tol)?;
    Ok((x, it))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_takes_one_iteration() {
        let a = SparseMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 0.0];
        let (x, it) = spd_solve(&a, &b, 1e-12).unwrap();
        assert!(it <= 1);
        assert_eq!(x, b);
        let (x, it) = spd_solve(&a, &[0.0; 5], 1e-12).unwrap();
        assert_eq!((x, it), (vec![0.0; 5], 0));
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(spd_solve(&a, &[1.0, -1.0], 1e-12).is_err());
    }
}
