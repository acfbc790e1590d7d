use super::FemError;

/// Square matrix in compressed sparse row form. Column indices are sorted
/// within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicate entries.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self, FemError> {
        if let Some(&(i, j, _)) = triplets.iter().find(|t| t.0 >= n || t.1 >= n) {
            return Err(FemError::IndexOutOfRange { index: i.max(j), n });
        }
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    pub fn diagonal_matrix(d: &[f64]) -> Self {
        let n = d.len();
        Self { n, row_ptr: (0..=n).collect(), col_idx: (0..n).collect(), values: d.to_vec() }
    }

    /// Dense row-major input, dropping exact zeros. Mostly for tests.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, FemError> {
        let n = rows.len();
        let mut t = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(FemError::DimensionMismatch { expected: n, got: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(column, value)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.spmv(x, &mut y);
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let ay = self.mul_vec(y);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &SparseMatrix, s: f64) -> Result<Self, FemError> {
        if other.n != self.n {
            return Err(FemError::DimensionMismatch { expected: self.n, got: other.n });
        }
        let mut row_ptr = Vec::with_capacity(self.n + 1);
        let mut col_idx = Vec::with_capacity(self.nnz().max(other.nnz()));
        let mut values = Vec::with_capacity(col_idx.capacity());
        row_ptr.push(0);
        for i in 0..self.n {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).map(|(j, v)| (j, s * v)).peekable();
            loop {
                let next = match (a.peek(), b.peek()) {
                    (Some(&(ja, va)), Some(&(jb, vb))) => {
                        if ja == jb {
                            a.next();
                            b.next();
                            (ja, va + vb)
                        } else if ja < jb {
                            a.next();
                            (ja, va)
                        } else {
                            b.next();
                            (jb, vb)
                        }
                    }
                    (Some(_), None) => a.next().unwrap(),
                    (None, Some(_)) => b.next().unwrap(),
                    (None, None) => break,
                };
                col_idx.push(next.0);
                values.push(next.1);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n: self.n, row_ptr, col_idx, values })
    }

    /// `self + diag(d)`.
    pub fn with_added_diagonal(&self, d: &[f64]) -> Result<Self, FemError> {
        self.add_scaled(&Self::diagonal_matrix(d), 1.0)
    }

    /// Submatrix `A[rows, cols]` where `map_*[k]` gives the new index of old
    /// index `k`, or `None` to drop it.
    pub fn submatrix(&self, rows: &[usize], col_map: &[Option<usize>], n_cols: usize) -> SubMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for &i in rows {
            for (j, v) in self.row(i) {
                if let Some(nj) = col_map[j] {
                    col_idx.push(nj);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SubMatrix { n_rows: rows.len(), n_cols, row_ptr, col_idx, values }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol * (1.0 + v.abs())))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Rectangular CSR block produced by [`SparseMatrix::submatrix`].
#[derive(Clone, Debug)]
pub struct SubMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SubMatrix {
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.values[k] * x[self.col_idx[k]])
                    .sum()
            })
            .collect()
    }

    /// Converts a square block to a [`SparseMatrix`].
    pub fn into_square(self) -> Result<SparseMatrix, FemError> {
        if self.n_rows != self.n_cols {
            return Err(FemError::DimensionMismatch { expected: self.n_rows, got: self.n_cols });
        }
        Ok(SparseMatrix { n: self.n_rows, row_ptr: self.row_ptr, col_idx: self.col_idx, values: self.values })
    }
}
