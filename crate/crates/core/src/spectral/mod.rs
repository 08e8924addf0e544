//! Matrix representations in the boundary Fourier basis.
//!
//! Row and column `i ∈ 0..2N` of a [`SpectralMatrix`] stand for the Fourier
//! index `n = i − N` when `i < N` and `n = i − N + 1` otherwise, so that the
//! exchange reflection `n ↦ −n` is `i ↦ 2N − 1 − i`. The exchange matrix is
//! never stored.

mod assembly;
mod coefficients;
mod quadrature;

use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use assembly::{
    assemble_h_plus, background_nd, ball_perturbation_block, concentric_eigenvalues,
    concentric_nd, eigenvalue_perturbation, frechet_ball, frechet_plus_block, h_rho_window,
    involution_residual, involution_residual_rho, nd_ball, nd_ball_explicit, BallNd,
};
pub use coefficients::{h_polynomial_coefficients, HCoefficients, HPolynomial};
pub use quadrature::{assemble_h_quadrature, default_quadrature_points, gauss_legendre};

/// Default working precision for evaluating the `H_ρ` polynomials.
pub const DEFAULT_PRECISION_BITS: u32 = 256;
/// Default bound on the involution residual certifying the assembly order.
pub const DEFAULT_INVOLUTION_TOL: f64 = 1e-8;

/// Structure an operator is known to have by construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub hermitian: bool,
    pub centrohermitian: bool,
    pub block_diagonal: bool,
}

impl Structure {
    pub const NONE: Self = Self {
        hermitian: false,
        centrohermitian: false,
        block_diagonal: false,
    };
    pub const ALL: Self = Self {
        hermitian: true,
        centrohermitian: true,
        block_diagonal: true,
    };
    /// Hermitian and centrohermitian but possibly coupling positive and negative modes.
    pub const SYMMETRIC: Self = Self {
        hermitian: true,
        centrohermitian: true,
        block_diagonal: false,
    };

    fn and(self, other: Self) -> Self {
        Self {
            hermitian: self.hermitian && other.hermitian,
            centrohermitian: self.centrohermitian && other.centrohermitian,
            block_diagonal: self.block_diagonal && other.block_diagonal,
        }
    }
}

/// Complex `2N × 2N` matrix indexed by `n, m ∈ {−N,…,−1,1,…,N}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMatrix {
    order: usize,
    entries: DMatrix<Complex64>,
    structure: Structure,
}

/// Storage index of Fourier index `n` at order `order`.
pub fn index_of(order: usize, n: i64) -> usize {
    let big_n = order as i64;
    assert!(n != 0 && n.abs() <= big_n, "Fourier index {n} outside ±1..±{order}");
    if n < 0 {
        (n + big_n) as usize
    } else {
        (n + big_n - 1) as usize
    }
}

/// Fourier index stored at row or column `i`.
pub fn mode_of(order: usize, i: usize) -> i64 {
    let big_n = order as i64;
    let i = i as i64;
    if i < big_n {
        i - big_n
    } else {
        i - big_n + 1
    }
}

impl SpectralMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            entries: DMatrix::zeros(2 * order, 2 * order),
            structure: Structure::ALL,
        }
    }

    pub fn identity(order: usize) -> Self {
        Self {
            order,
            entries: DMatrix::identity(2 * order, 2 * order),
            structure: Structure::ALL,
        }
    }

    /// Diagonal matrix with `values[|n| − 1]` at both `n` and `−n`.
    pub fn from_symmetric_diagonal(values: &[f64]) -> Self {
        let order = values.len();
        let mut m = Self::zeros(order);
        for (k, &v) in values.iter().enumerate() {
            let n = k as i64 + 1;
            m.set(n, n, Complex64::new(v, 0.0));
            m.set(-n, -n, Complex64::new(v, 0.0));
        }
        m
    }

    /// Wraps raw entries; no structure is assumed.
    pub fn from_entries(order: usize, entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != 2 * order || entries.ncols() != 2 * order {
            return Err(Error::DimensionMismatch(order, entries.nrows() / 2));
        }
        Ok(Self {
            order,
            entries,
            structure: Structure::NONE,
        })
    }

    /// Block-diagonal matrix whose `n, m > 0` block is `plus` and whose
    /// `n, m < 0` block is its centrohermitian reflection.
    pub fn from_positive_block(plus: &DMatrix<Complex64>, structure: Structure) -> Self {
        assert_eq!(plus.nrows(), plus.ncols(), "positive block must be square");
        let order = plus.nrows();
        let mut entries = DMatrix::zeros(2 * order, 2 * order);
        for j in 0..order {
            for i in 0..order {
                let v = plus[(i, j)];
                entries[(order + i, order + j)] = v;
                entries[(order - 1 - i, order - 1 - j)] = v.conj();
            }
        }
        Self {
            order,
            entries,
            structure: Structure {
                centrohermitian: true,
                block_diagonal: true,
                ..structure
            },
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        2 * self.order
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn with_structure(mut self, structure: Structure) -> Self {
        self.structure = structure;
        self
    }

    pub fn get(&self, n: i64, m: i64) -> Complex64 {
        self.entries[(index_of(self.order, n), index_of(self.order, m))]
    }

    pub fn set(&mut self, n: i64, m: i64, value: Complex64) {
        let (i, j) = (index_of(self.order, n), index_of(self.order, m));
        self.entries[(i, j)] = value;
    }

    /// `n, m > 0` block.
    pub fn positive_block(&self) -> DMatrix<Complex64> {
        self.entries
            .view((self.order, self.order), (self.order, self.order))
            .into_owned()
    }

    /// `max |M − M*|`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |M_{n,m} − conj(M_{−n,−m})|`.
    pub fn centrohermitian_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..d {
                let mirrored = self.entries[(d - 1 - i, d - 1 - j)].conj();
                worst = worst.max((self.entries[(i, j)] - mirrored).norm());
            }
        }
        worst
    }

    /// Largest entry coupling modes of opposite sign.
    pub fn off_block_magnitude(&self) -> f64 {
        let n = self.order;
        let mut worst = 0.0f64;
        for j in 0..2 * n {
            for i in 0..2 * n {
                if (i < n) != (j < n) {
                    worst = worst.max(self.entries[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Structure verified numerically at tolerance `tol`.
    pub fn detect_structure(&self, tol: f64) -> Structure {
        Structure {
            hermitian: self.hermitian_defect() <= tol,
            centrohermitian: self.centrohermitian_defect() <= tol,
            block_diagonal: self.off_block_magnitude() <= tol,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            order: self.order,
            entries: self.entries.adjoint(),
            structure: self.structure,
        }
    }

    /// `J·conj(M)·J`.
    pub fn centro_reflection(&self) -> Self {
        let d = self.dim();
        let entries = DMatrix::from_fn(d, d, |i, j| self.entries[(d - 1 - i, d - 1 - j)].conj());
        Self {
            order: self.order,
            entries,
            structure: self.structure,
        }
    }

    /// Hermitian part followed by the centrohermitian part:
    /// `E² = (E + E*)/2`, `E³ = (E² + J·conj(E²)·J)/2`.
    pub fn symmetrized(&self) -> Self {
        let d = self.dim();
        let herm = DMatrix::from_fn(d, d, |i, j| {
            (self.entries[(i, j)] + self.entries[(j, i)].conj()) * 0.5
        });
        let entries = DMatrix::from_fn(d, d, |i, j| {
            (herm[(i, j)] + herm[(d - 1 - i, d - 1 - j)].conj()) * 0.5
        });
        Self {
            order: self.order,
            entries,
            structure: Structure {
                hermitian: true,
                centrohermitian: true,
                block_diagonal: self.structure.block_diagonal,
            },
        }
    }

    /// Central `2n × 2n` sub-matrix (modes `|k| ≤ n`).
    pub fn central(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.order {
            return Err(Error::InvalidOrder(format!(
                "cannot extract order {n} from a matrix of order {}",
                self.order
            )));
        }
        let start = self.order - n;
        Ok(Self {
            order: n,
            entries: self.entries.view((start, start), (2 * n, 2 * n)).into_owned(),
            structure: self.structure,
        })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            order: self.order,
            entries: &self.entries * Complex64::new(factor, 0.0),
            structure: self.structure,
        }
    }

    /// `M + α·I`.
    pub fn shifted(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.entries[(i, i)] += alpha;
        }
        out
    }

    /// Conjugation by the diagonal phase `e^{inφ}`, i.e. the ND matrix of the
    /// conductivity rotated by `φ` about the origin:
    /// `M_{n,m} ↦ e^{i(m−n)φ}·M_{n,m}`.
    pub fn rotated(&self, phi: f64) -> Self {
        let d = self.dim();
        let entries = DMatrix::from_fn(d, d, |i, j| {
            let shift = (mode_of(self.order, j) - mode_of(self.order, i)) as f64;
            self.entries[(i, j)] * Complex64::from_polar(1.0, shift * phi)
        });
        Self {
            order: self.order,
            entries,
            structure: self.structure,
        }
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        smallest_eigenvalue(&self.entries)
    }

    /// Largest singular value; for Hermitian input this is the largest
    /// eigenvalue magnitude.
    pub fn norm2(&self) -> f64 {
        self.entries.clone().singular_values().max()
    }

    fn check_same_order(&self, other: &Self) -> Result<()> {
        if self.order == other.order {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(self.order, other.order))
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_order(other)?;
        Ok(self + other)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_order(other)?;
        Ok(self - other)
    }
}

/// Smallest eigenvalue of a Hermitian matrix (only the lower triangle and the
/// diagonal are trusted by the tridiagonalization).
pub fn smallest_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

impl Add for &SpectralMatrix {
    type Output = SpectralMatrix;

    fn add(self, rhs: Self) -> SpectralMatrix {
        assert_eq!(self.order, rhs.order, "order mismatch");
        SpectralMatrix {
            order: self.order,
            entries: &self.entries + &rhs.entries,
            structure: self.structure.and(rhs.structure),
        }
    }
}

impl Sub for &SpectralMatrix {
    type Output = SpectralMatrix;

    fn sub(self, rhs: Self) -> SpectralMatrix {
        assert_eq!(self.order, rhs.order, "order mismatch");
        SpectralMatrix {
            order: self.order,
            entries: &self.entries - &rhs.entries,
            structure: self.structure.and(rhs.structure),
        }
    }
}

impl Mul<f64> for &SpectralMatrix {
    type Output = SpectralMatrix;

    fn mul(self, rhs: f64) -> SpectralMatrix {
        self.scaled(rhs)
    }
}

/// The `n, m > 0` block of a block-structured operator (`H_a⁺`, `D⁺`, `A′⁺`),
/// stored `Ñ × Ñ` with row `n − 1` for mode `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfBlock {
    pub entries: DMatrix<Complex64>,
}

impl HalfBlock {
    pub fn new(entries: DMatrix<Complex64>) -> Self {
        assert_eq!(entries.nrows(), entries.ncols(), "half block must be square");
        Self { entries }
    }

    pub fn order(&self) -> usize {
        self.entries.nrows()
    }

    /// Entry `(n, m)` for `n, m ≥ 1`.
    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[(n - 1, m - 1)]
    }

    /// Full block-diagonal, centrohermitian matrix built from this block.
    pub fn expand(&self) -> SpectralMatrix {
        SpectralMatrix::from_positive_block(&self.entries, Structure::NONE)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.order(), other.order());
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Data truncation `N` and assembly truncation `Ñ ≥ N`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    pub data_order: usize,
    pub assembly_order: usize,
    pub precision_bits: u32,
    pub involution_tol: f64,
}

impl Default for TruncationPlan {
    fn default() -> Self {
        Self {
            data_order: 16,
            assembly_order: 200,
            precision_bits: DEFAULT_PRECISION_BITS,
            involution_tol: DEFAULT_INVOLUTION_TOL,
        }
    }
}

impl TruncationPlan {
    pub fn new(data_order: usize, assembly_order: usize) -> Result<Self> {
        let plan = Self {
            data_order,
            assembly_order,
            ..Self::default()
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.data_order == 0 {
            return Err(Error::InvalidOrder("data order must be at least 1".into()));
        }
        if self.assembly_order < self.data_order {
            return Err(Error::InvalidOrder(format!(
                "assembly order {} is below data order {}",
                self.assembly_order, self.data_order
            )));
        }
        if self.precision_bits < 64 {
            return Err(Error::PrecisionTooLow(self.precision_bits));
        }
        Ok(())
    }
}
