use super::{element_gradients, FeFunction, FemError};

/// L2 norm and full H1 norm (`sqrt(L2^2 + |grad|^2)`) of an error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1: f64,
}

/// Norms of `u_ref - P u_coarse` on the fine mesh, where `P` is exact P1
/// prolongation. Integrals are exact elementwise.
pub fn error_norms(u_ref: &FeFunction<'_>, u_coarse: &FeFunction<'_>) -> Result<ErrorNorms, FemError> {
    let fine = u_ref.mesh;
    let prolonged = u_coarse.prolong_to(fine)?;
    let err: Vec<f64> = u_ref.values.iter().zip(&prolonged).map(|(a, b)| a - b).collect();
    let d = fine.dim();
    let denom = ((d + 1) * (d + 2)) as f64;
    let (mut l2sq, mut semisq) = (0.0, 0.0);
    for e in 0..fine.num_elements() {
        let el = fine.element(e);
        let vol = fine.signed_volume(e);
        let local: Vec<f64> = el.iter().map(|&i| err[i]).collect();
        let sum: f64 = local.iter().sum();
        let sumsq: f64 = local.iter().map(|v| v * v).sum();
        // e^T M_K e with M_K = vol/((d+1)(d+2)) (1 + delta_ij).
        l2sq += vol / denom * (sumsq + sum * sum);
        let g = element_gradients(fine, e);
        let mut grad = [0.0; 3];
        for (k, v) in local.iter().enumerate() {
            for c in 0..d {
                grad[c] += v * g[k][c];
            }
        }
        semisq += vol * grad.iter().map(|x| x * x).sum::<f64>();
    }
    Ok(ErrorNorms { l2: l2sq.sqrt(), h1: (l2sq + semisq).sqrt() })
}
