use std::fmt::Write as _;

use super::FemError;

const PERMS_1: [[usize; 3]; 1] = [[0, 0, 0]];
const PERMS_2: [[usize; 3]; 2] = [[0, 1, 0], [1, 0, 0]];
const PERMS_3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Uniform simplicial mesh of the unit cube `(0,1)^dim`.
///
/// Each cell is cut into `dim!` Kuhn simplices, all sharing the main diagonal,
/// so meshes of size `n` and `k n` are nested. Vertices are numbered
/// lexicographically with the first coordinate varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    dim: usize,
    n: usize,
    coords: Vec<f64>,
    elements: Vec<usize>,
    boundary: Vec<usize>,
    on_boundary: Vec<bool>,
}

/// Point location result: the simplex vertices and barycentric weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub vertices: [usize; 4],
    pub weights: [f64; 4],
    /// Axis permutation of the Kuhn simplex (coordinates in descending order).
    pub axes: [usize; 3],
}

pub fn build_uniform_mesh(dim: usize, n: usize) -> Result<Mesh, FemError> {
    Mesh::uniform(dim, n)
}

impl Mesh {
    pub fn uniform(dim: usize, n: usize) -> Result<Self, FemError> {
        if !(1..=3).contains(&dim) {
            return Err(FemError::BadDimension(dim));
        }
        if n == 0 {
            return Err(FemError::BadResolution(n));
        }
        let side = n + 1;
        let nv = side.pow(dim as u32);
        let h = 1.0 / n as f64;
        let mut coords = Vec::with_capacity(nv * dim);
        let mut on_boundary = Vec::with_capacity(nv);
        let mut boundary = Vec::new();
        for v in 0..nv {
            let mut edge = false;
            let mut rest = v;
            for _ in 0..dim {
                let i = rest % side;
                rest /= side;
                coords.push(i as f64 * h);
                edge |= i == 0 || i == n;
            }
            on_boundary.push(edge);
            if edge {
                boundary.push(v);
            }
        }
        let perms: &[[usize; 3]] = match dim {
            1 => &PERMS_1,
            2 => &PERMS_2,
            _ => &PERMS_3,
        };
        let stride = [1, side, side * side];
        let n_cells = n.pow(dim as u32);
        let mut elements = Vec::with_capacity(n_cells * perms.len() * (dim + 1));
        for cell in 0..n_cells {
            let mut rest = cell;
            let mut origin = 0;
            for s in stride.iter().take(dim) {
                origin += (rest % n) * s;
                rest /= n;
            }
            for perm in perms {
                let mut simplex = [0usize; 4];
                simplex[0] = origin;
                for k in 0..dim {
                    simplex[k + 1] = simplex[k] + stride[perm[k]];
                }
                elements.extend_from_slice(&simplex[..=dim]);
            }
        }
        let mut mesh = Self { dim, n, coords, elements, boundary, on_boundary };
        // Swap two vertices of negatively oriented simplices.
        for e in 0..mesh.num_elements() {
            if mesh.signed_volume(e) < 0.0 {
                let base = e * (dim + 1);
                mesh.elements.swap(base + dim - 1, base + dim);
            }
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_side(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn num_vertices(&self) -> usize {
        self.on_boundary.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len() / (self.dim + 1)
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.elements[e * (self.dim + 1)..(e + 1) * (self.dim + 1)]
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    /// Interior vertices in increasing order.
    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&i| !self.on_boundary[i]).collect()
    }

    /// Edge vectors `v_k - v_0` as columns of a `dim x dim` matrix (row-major).
    pub(crate) fn jacobian(&self, e: usize) -> [[f64; 3]; 3] {
        let el = self.element(e);
        let p0 = self.vertex(el[0]);
        let mut j = [[0.0; 3]; 3];
        for k in 0..self.dim {
            let pk = self.vertex(el[k + 1]);
            for (r, row) in j.iter_mut().enumerate().take(self.dim) {
                row[k] = pk[r] - p0[r];
            }
        }
        j
    }

    pub fn signed_volume(&self, e: usize) -> f64 {
        let j = self.jacobian(e);
        match self.dim {
            1 => j[0][0],
            2 => 0.5 * (j[0][0] * j[1][1] - j[0][1] * j[1][0]),
            _ => {
                let det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1])
                    - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0])
                    + j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
                det / 6.0
            }
        }
    }

    /// Vertex index of the lattice point with integer coordinates `idx`.
    pub fn lattice_vertex(&self, idx: &[usize]) -> usize {
        let side = self.n + 1;
        idx.iter().rev().fold(0, |acc, &i| acc * side + i)
    }

    /// Locates `x` in the Kuhn simplex that contains it (points on the
    /// boundary of the unit cube included).
    pub fn locate(&self, x: &[f64]) -> Location {
        let d = self.dim;
        let nf = self.n as f64;
        let mut cell = [0usize; 3];
        let mut local = [0.0f64; 3];
        for k in 0..d {
            let s = (x[k] * nf).clamp(0.0, nf);
            let c = (s.floor() as usize).min(self.n - 1);
            cell[k] = c;
            local[k] = s - c as f64;
        }
        let mut axes = [0usize, 1, 2];
        axes[..d].sort_by(|&a, &b| local[b].total_cmp(&local[a]).then(a.cmp(&b)));
        let mut vertices = [0usize; 4];
        let mut weights = [0.0; 4];
        let mut idx = cell;
        vertices[0] = self.lattice_vertex(&idx[..d]);
        weights[0] = 1.0 - local[axes[0]];
        for k in 0..d {
            idx[axes[k]] += 1;
            vertices[k + 1] = self.lattice_vertex(&idx[..d]);
            let next = if k + 1 < d { local[axes[k + 1]] } else { 0.0 };
            weights[k + 1] = local[axes[k]] - next;
        }
        Location { vertices, weights, axes }
    }

    /// True when every vertex of `self` is a vertex of `fine`.
    pub fn is_coarsening_of(&self, fine: &Mesh) -> bool {
        self.dim == fine.dim && fine.n % self.n == 0
    }

    /// Line-oriented text dump: header, coordinates, connectivity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mesh dim={} n={}", self.dim, self.n);
        let _ = writeln!(s, "vertices {}", self.num_vertices());
        for i in 0..self.num_vertices() {
            let line: Vec<String> = self.vertex(i).iter().map(|c| format!("{c}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        let _ = writeln!(s, "elements {}", self.num_elements());
        for e in 0..self.num_elements() {
            let line: Vec<String> = self.element(e).iter().map(|c| c.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }
}

/// Continuous piecewise-linear function given by nodal values.
#[derive(Clone, Copy, Debug)]
pub struct FeFunction<'a> {
    pub mesh: &'a Mesh,
    pub values: &'a [f64],
}

impl<'a> FeFunction<'a> {
    pub fn new(mesh: &'a Mesh, values: &'a [f64]) -> Result<Self, FemError> {
        if values.len() != mesh.num_vertices() {
            return Err(FemError::DimensionMismatch { expected: mesh.num_vertices(), got: values.len() });
        }
        Ok(Self { mesh, values })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let loc = self.mesh.locate(x);
        (0..=self.mesh.dim).map(|k| loc.weights[k] * self.values[loc.vertices[k]]).sum()
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 3] {
        let loc = self.mesh.locate(x);
        let nf = self.mesh.n as f64;
        let mut g = [0.0; 3];
        for k in 0..self.mesh.dim {
            g[loc.axes[k]] = nf * (self.values[loc.vertices[k + 1]] - self.values[loc.vertices[k]]);
        }
        g
    }

    /// Nodal values on a nested finer mesh (exact for P1).
    pub fn prolong_to(&self, fine: &Mesh) -> Result<Vec<f64>, FemError> {
        if !self.mesh.is_coarsening_of(fine) {
            return Err(FemError::NotNested { coarse: self.mesh.n, fine: fine.n });
        }
        Ok((0..fine.num_vertices()).map(|i| self.eval(fine.vertex(i))).collect())
    }

    /// Injection of nodal values of a finer nested mesh onto `coarse`.
    pub fn restrict_to(&self, coarse: &Mesh) -> Result<Vec<f64>, FemError> {
        if !coarse.is_coarsening_of(self.mesh) {
            return Err(FemError::NotNested { coarse: coarse.n, fine: self.mesh.n });
        }
        let ratio = self.mesh.n / coarse.n;
        let side = coarse.n + 1;
        Ok((0..coarse.num_vertices())
            .map(|v| {
                let mut idx = [0usize; 3];
                let mut rest = v;
                for slot in idx.iter_mut().take(coarse.dim) {
                    *slot = (rest % side) * ratio;
                    rest /= side;
                }
                self.values[self.mesh.lattice_vertex(&idx[..coarse.dim])]
            })
            .collect())
    }
}
