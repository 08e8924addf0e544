//! Piecewise-affine finite element simulation of ND matrices on the unit disk
//! for piecewise-constant conductivities `γ = 1 + Σ κ_i χ_{D_i}`.

pub mod mesh;
pub mod solver;

pub use mesh::{mesh_disk, DiskMesh, DEFAULT_H};
pub use solver::{
    nd_matrix_fem, nd_matrix_fem_corrected, simulate, simulate_corrected, solve_neumann, FemNd, FemSystem,
};

#[derive(Debug, thiserror::Error)]
pub enum FemError {
    #[error("mesh size {0} must lie in (0, 0.5)")]
    InvalidMeshSize(f64),
    #[error("order {0} must be at least 1")]
    InvalidOrder(usize),
    #[error("mesh generation failed: {0}")]
    Mesh(String),
    #[error("linear solver failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Core(#[from] eitmono_core::Error),
}

pub type Result<T> = std::result::Result<T, FemError>;
