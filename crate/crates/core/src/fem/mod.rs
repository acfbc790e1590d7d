//! Uniform simplicial meshes, P1 assembly, Dirichlet elimination and
//! discrete error norms.

mod assembly;
mod dirichlet;
mod mesh;
mod norms;
mod sparse;

pub use assembly::{assemble_lumped_mass, assemble_mass, assemble_stiffness, element_gradients};
pub use dirichlet::{apply_dirichlet, reduce_dirichlet, ReducedSystem};
pub use mesh::{build_uniform_mesh, FeFunction, Location, Mesh};
pub use norms::{error_norms, ErrorNorms};
pub use sparse::{SparseMatrix, SubMatrix};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("dimension must be 1, 2 or 3, got {0}")]
    BadDimension(usize),
    #[error("need at least one cell per side, got {0}")]
    BadResolution(usize),
    #[error("index {index} out of range for size {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mesh with {coarse} cells per side is not nested in one with {fine}")]
    NotNested { coarse: usize, fine: usize },
}
