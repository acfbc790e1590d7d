use super::{FemError, SparseMatrix, SubMatrix};

/// System restricted to free nodes after eliminating prescribed values.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub a: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Original index of each free unknown.
    pub free: Vec<usize>,
    /// Full-length vector holding the prescribed values (zero on free nodes).
    pub prescribed: Vec<f64>,
}

impl ReducedSystem {
    /// Scatters free values back into a full-length vector.
    pub fn expand(&self, x_free: &[f64]) -> Vec<f64> {
        let mut full = self.prescribed.clone();
        for (&i, &v) in self.free.iter().zip(x_free) {
            full[i] = v;
        }
        full
    }
}

fn constraint_mask(n: usize, bc: &[(usize, f64)]) -> Result<(Vec<bool>, Vec<f64>), FemError> {
    let mut fixed = vec![false; n];
    let mut values = vec![0.0; n];
    for &(i, v) in bc {
        if i >= n {
            return Err(FemError::IndexOutOfRange { index: i, n });
        }
        fixed[i] = true;
        values[i] = v;
    }
    Ok((fixed, values))
}

/// Eliminates the prescribed nodes: returns `A_ff` and `rhs_f - A_fc g`.
pub fn reduce_dirichlet(a: &SparseMatrix, rhs: &[f64], bc: &[(usize, f64)]) -> Result<ReducedSystem, FemError> {
    let n = a.n();
    if rhs.len() != n {
        return Err(FemError::DimensionMismatch { expected: n, got: rhs.len() });
    }
    let (fixed, prescribed) = constraint_mask(n, bc)?;
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let mut col_map = vec![None; n];
    for (k, &i) in free.iter().enumerate() {
        col_map[i] = Some(k);
    }
    let a_ff = a.submatrix(&free, &col_map, free.len()).into_square()?;
    let coupling = coupling_block(a, &free, &fixed);
    let lift = coupling.mul_vec(&prescribed);
    let rhs_f = free.iter().zip(&lift).map(|(&i, l)| rhs[i] - l).collect();
    Ok(ReducedSystem { a: a_ff, rhs: rhs_f, free, prescribed })
}

/// Rows `free`, all columns, restricted to the constrained columns.
fn coupling_block(a: &SparseMatrix, free: &[usize], fixed: &[bool]) -> SubMatrix {
    let col_map: Vec<Option<usize>> = (0..a.n()).map(|j| fixed[j].then_some(j)).collect();
    a.submatrix(free, &col_map, a.n())
}

/// Full-size constrained system: prescribed rows and columns become identity
/// and their couplings move to the right-hand side, keeping symmetry.
pub fn apply_dirichlet(
    a: &SparseMatrix,
    rhs: &[f64],
    bc: &[(usize, f64)],
) -> Result<(SparseMatrix, Vec<f64>), FemError> {
    let n = a.n();
    if rhs.len() != n {
        return Err(FemError::DimensionMismatch { expected: n, got: rhs.len() });
    }
    let (fixed, g) = constraint_mask(n, bc)?;
    let ag = a.mul_vec(&g);
    let mut t = Vec::with_capacity(a.nnz());
    let mut b = vec![0.0; n];
    for i in 0..n {
        if fixed[i] {
            t.push((i, i, 1.0));
            b[i] = g[i];
        } else {
            b[i] = rhs[i] - ag[i];
            t.extend(a.row(i).filter(|&(j, _)| !fixed[j]).map(|(j, v)| (i, j, v)));
        }
    }
    Ok((SparseMatrix::from_triplets(n, t)?, b))
}
