//! Exact Neumann-to-Dirichlet (ND) matrix characterizations for ball
//! conductivity inclusions in the unit disk, and the regularized linear and
//! non-linear monotonicity reconstructions built on top of them.
//!
//! All operators are represented in the boundary Fourier basis
//! `f_n(θ) = e^{inθ}/√(2π)`, `n ∈ {−N,…,−1,1,…,N}`, with rows and columns
//! ordered from `−N` (top left) to `N` (bottom right). With that ordering the
//! ND map of any real conductivity is Hermitian and centrohermitian, and for a
//! single ball inclusion it is also block diagonal.
//!
//! Module map:
//!
//! - [`mobius`]: disk automorphisms pairing a ball `B_{C,R}` with a concentric
//!   ball `B_{0,r}`.
//! - [`spectral`]: the `H_a` matrices (exact polynomial path and quadrature
//!   path), concentric eigenvalues, ball ND matrices and Fréchet derivatives.
//! - [`noise`]: structured noise with exact operator-norm calibration.
//! - [`tiling`], [`engine`]: hexagonal pixelization and the monotonicity tests.
//! - [`compare`]: set differences between linear and non-linear reconstructions.
//! - [`phantom`], [`io`], [`svg`]: phantom descriptions, file formats and rendering.

pub mod compare;
pub mod engine;
pub mod error;
pub mod io;
pub mod mobius;
pub mod noise;
pub mod phantom;
pub mod spectral;
pub mod svg;
pub mod tiling;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use compare::{diff, DiffReport};
pub use engine::{
    beta_values, reconstruct, reg_alpha, reg_alpha_signed, test_cell_linear, test_cell_nonlinear, HColumnCache,
    Method, ReconConfig, ReconResult, Reconstructor,
};
pub use mobius::{Ball, MobiusParams};
pub use noise::{make_noise, operator_norm, NoiseSpec};
pub use phantom::{Inclusion, Phantom, Shape};
pub use spectral::{
    background_nd, frechet_ball, nd_ball, HalfBlock, SpectralMatrix, Structure, TruncationPlan,
};
pub use tiling::{hex_tiling, HexTiling};
