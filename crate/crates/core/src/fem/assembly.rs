use super::{Mesh, SparseMatrix};

/// Inverse of the leading `d x d` block, row-major.
fn invert(j: &[[f64; 3]; 3], d: usize) -> [[f64; 3]; 3] {
    let mut a = *j;
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate().take(d) {
        row[i] = 1.0;
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, piv);
        inv.swap(col, piv);
        let s = 1.0 / a[col][col];
        for k in 0..d {
            a[col][k] *= s;
            inv[col][k] *= s;
        }
        for r in 0..d {
            if r != col {
                let f = a[r][col];
                for k in 0..d {
                    a[r][k] -= f * a[col][k];
                    inv[r][k] -= f * inv[col][k];
                }
            }
        }
    }
    inv
}

/// Gradients of the barycentric coordinates of element `e`, one per vertex.
pub fn element_gradients(mesh: &Mesh, e: usize) -> [[f64; 3]; 4] {
    let d = mesh.dim();
    let inv = invert(&mesh.jacobian(e), d);
    // Row k of J^{-1} is the gradient of lambda_{k+1}.
    let mut g = [[0.0; 3]; 4];
    for k in 0..d {
        for c in 0..d {
            g[k + 1][c] = inv[k][c];
            g[0][c] -= inv[k][c];
        }
    }
    g
}

/// Consistent mass matrix `M_ij = int psi_i psi_j`.
pub fn assemble_mass(mesh: &Mesh) -> SparseMatrix {
    let d = mesh.dim();
    let denom = ((d + 1) * (d + 2)) as f64;
    let mut t = Vec::with_capacity(mesh.num_elements() * (d + 1) * (d + 1));
    for e in 0..mesh.num_elements() {
        let vol = mesh.signed_volume(e);
        let el = mesh.element(e);
        for (a, &i) in el.iter().enumerate() {
            for (b, &j) in el.iter().enumerate() {
                let f = if a == b { 2.0 } else { 1.0 };
                t.push((i, j, f * vol / denom));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.num_vertices(), t).expect("element indices are in range")
}

/// Row-sum lumped mass `D_ii = int I_h psi_i`.
pub fn assemble_lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let d = mesh.dim();
    let mut out = vec![0.0; mesh.num_vertices()];
    for e in 0..mesh.num_elements() {
        let share = mesh.signed_volume(e) / (d + 1) as f64;
        for &i in mesh.element(e) {
            out[i] += share;
        }
    }
    out
}

/// Stiffness matrix `K_ij = int grad psi_j . grad psi_i`.
pub fn assemble_stiffness(mesh: &Mesh) -> SparseMatrix {
    let d = mesh.dim();
    let mut t = Vec::with_capacity(mesh.num_elements() * (d + 1) * (d + 1));
    for e in 0..mesh.num_elements() {
        let vol = mesh.signed_volume(e);
        let g = element_gradients(mesh, e);
        let el = mesh.element(e);
        for (a, &i) in el.iter().enumerate() {
            for (b, &j) in el.iter().enumerate() {
                let dot: f64 = (0..d).map(|c| g[a][c] * g[b][c]).sum();
                t.push((i, j, vol * dot));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.num_vertices(), t).expect("element indices are in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
        a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).abs() < 1e-14)
    }

    #[test]
    fn one_dimensional_matrices() {
        let m = Mesh::uniform(1, 2).unwrap();
        let h: f64 = 0.5;
        let mass = assemble_mass(&m).to_dense();
        let expect_m: Vec<Vec<f64>> = [[2.0, 1.0, 0.0], [1.0, 4.0, 1.0], [0.0, 1.0, 2.0]]
            .iter()
            .map(|r| r.iter().map(|v| v * h / 6.0).collect())
            .collect();
        assert!(close(&mass, &expect_m));
        let k = assemble_stiffness(&m).to_dense();
        let expect_k: Vec<Vec<f64>> = [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]]
            .iter()
            .map(|r| r.iter().map(|v| v / h).collect())
            .collect();
        assert!(close(&k, &expect_k));
        assert_eq!(assemble_lumped_mass(&m), vec![h / 2.0, h, h / 2.0]);
    }

    #[test]
    fn partition_of_unity_and_constants() {
        for dim in 1..=3 {
            let m = Mesh::uniform(dim, 3).unwrap();
            let mass = assemble_mass(&m);
            let lumped = assemble_lumped_mass(&m);
            for (a, b) in mass.row_sums().iter().zip(&lumped) {
                assert!((a - b).abs() < 1e-15);
            }
            assert!(lumped.iter().all(|&d| d > 0.0));
            let k = assemble_stiffness(&m);
            assert!(k.mul_vec(&vec![1.0; m.num_vertices()]).iter().all(|v| v.abs() < 1e-12));
            assert!(k.is_symmetric(1e-14) && mass.is_symmetric(1e-14));
        }
    }

    #[test]
    fn scaling_with_mesh_size() {
        for dim in 1..=3 {
            let (m1, m2) = (Mesh::uniform(dim, 1).unwrap(), Mesh::uniform(dim, 2).unwrap());
            let h = 0.5f64;
            // Corner vertex 0 touches the same number of simplices at every
            // resolution, so its diagonal entries scale like h^d and h^(d-2).
            let r_m = assemble_mass(&m2).get(0, 0) / assemble_mass(&m1).get(0, 0);
            let r_d = assemble_lumped_mass(&m2)[0] / assemble_lumped_mass(&m1)[0];
            let r_k = assemble_stiffness(&m2).get(0, 0) / assemble_stiffness(&m1).get(0, 0);
            assert!((r_m - h.powi(dim as i32)).abs() < 1e-14);
            assert!((r_d - h.powi(dim as i32)).abs() < 1e-14);
            assert!((r_k - h.powi(dim as i32 - 2)).abs() < 1e-12);
        }
    }
}
