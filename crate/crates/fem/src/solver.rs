//! Piecewise-affine Galerkin solver for the Neumann problem and FEM ND matrices.

use std::f64::consts::{PI, TAU};

use eitmono_core::{background_nd, Phantom, SpectralMatrix};
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use log::debug;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::mesh::{mesh_disk, DiskMesh};
use crate::{FemError, Result};

/// Factorized stiffness system of one conductivity on one mesh.
///
/// The zero-mean condition `∫u ds = 0` enters through a scalar multiplier
/// `λ`: `K u + b λ = F`, `bᵀu = 0` with `b_j = ∫φ_j ds`. Summing the rows gives
/// `λ = 1ᵀF / 1ᵀb`; the remaining singular system is solved with a unit shift
/// at one vertex (exact for a consistent right-hand side) and `u` is then
/// moved onto `bᵀu = 0`.
pub struct FemSystem {
    mesh: DiskMesh,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    /// Boundary arc weight `Δθ = 2π/M`.
    step: f64,
}

/// P1 stiffness entries of every element, `γ_t (∇φ_i·∇φ_j) |t|`.
/// `phantom = None` gives the unit conductivity on the same mesh.
fn element_stiffness(mesh: &DiskMesh, phantom: Option<&Phantom>) -> Vec<Triplet<usize, usize, f64>> {
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len() + 1);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let gamma = match (phantom, mesh.regions[t]) {
            (Some(p), Some(r)) => 1.0 + p.shapes[r].contrast,
            _ => 1.0,
        };
        let p = tri.map(|i| mesh.vertices[i]);
        let area = mesh.area(t);
        let mut grad = [[0.0; 2]; 3];
        for k in 0..3 {
            let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
            grad[k] = [a[1] - b[1], b[0] - a[0]];
        }
        for i in 0..3 {
            for j in 0..3 {
                let v = gamma * (grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1]) / (4.0 * area);
                triplets.push(Triplet::new(tri[i], tri[j], v));
            }
        }
    }
    triplets
}

impl FemSystem {
    pub fn new(mesh: DiskMesh, phantom: &Phantom) -> Result<Self> {
        if mesh.regions.iter().flatten().any(|&r| r >= phantom.shapes.len()) {
            return Err(FemError::Mesh("mesh regions do not match the phantom".into()));
        }
        Self::factorize(mesh, Some(phantom))
    }

    /// Unit conductivity on a (possibly phantom-aligned) mesh.
    pub fn background(mesh: DiskMesh) -> Result<Self> {
        Self::factorize(mesh, None)
    }

    fn factorize(mesh: DiskMesh, phantom: Option<&Phantom>) -> Result<Self> {
        let n = mesh.node_count();
        let mut triplets = element_stiffness(&mesh, phantom);
        triplets.push(Triplet::new(mesh.boundary[0], mesh.boundary[0], 1.0));
        let k = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| FemError::Solver(format!("{e:?}")))?;
        let llt = k
            .sp_cholesky(Side::Lower)
            .map_err(|e| FemError::Solver(format!("stiffness factorization failed: {e:?}")))?;
        debug!("factorized {n} nodes, {} elements", mesh.element_count());
        let step = TAU / mesh.boundary.len() as f64;
        Ok(Self { mesh, llt, step })
    }

    pub fn mesh(&self) -> &DiskMesh {
        &self.mesh
    }

    /// Boundary traces for boundary load vectors given column-wise
    /// (`loads[(j, c)]` pairs with boundary vertex `j`).
    pub fn solve_loads(&self, loads: &Mat<f64>) -> Mat<f64> {
        let m = self.mesh.boundary.len();
        let total_weight = TAU;
        let mut rhs = Mat::<f64>::zeros(self.mesh.node_count(), loads.ncols());
        for c in 0..loads.ncols() {
            let lambda = (0..m).map(|j| loads[(j, c)]).sum::<f64>() / total_weight;
            for (j, &v) in self.mesh.boundary.iter().enumerate() {
                rhs[(v, c)] = loads[(j, c)] - self.step * lambda;
            }
        }
        self.llt.solve_in_place(rhs.as_mut());
        let mut traces = Mat::<f64>::zeros(m, loads.ncols());
        for c in 0..loads.ncols() {
            let mean = self.mesh.boundary.iter().map(|&v| rhs[(v, c)]).sum::<f64>() * self.step / total_weight;
            for (j, &v) in self.mesh.boundary.iter().enumerate() {
                traces[(j, c)] = rhs[(v, c)] - mean;
            }
        }
        traces
    }

    /// `∫ g φ_j dθ` for each boundary hat function, by 4-point Gauss rules per segment.
    pub fn boundary_load(&self, g: &dyn Fn(f64) -> f64) -> Vec<f64> {
        const NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
        const WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
        let m = self.mesh.boundary.len();
        let mut load = vec![0.0; m];
        for j in 0..m {
            let t0 = self.mesh.boundary_angle(j);
            for (x, w) in NODES.iter().zip(WEIGHTS) {
                let s = 0.5 * (x + 1.0);
                let value = g(t0 + s * self.step) * w * 0.5 * self.step;
                load[j] += (1.0 - s) * value;
                load[(j + 1) % m] += s * value;
            }
        }
        load
    }

    /// Boundary trace of the mean-zero solution with current density `g(θ)`.
    pub fn solve_neumann(&self, g: &dyn Fn(f64) -> f64) -> Vec<f64> {
        let values = self.boundary_load(g);
        let load = Mat::from_fn(values.len(), 1, |j, _| values[j]);
        let trace = self.solve_loads(&load);
        (0..trace.nrows()).map(|j| trace[(j, 0)]).collect()
    }

    /// ND matrix of order `N` before symmetrization.
    pub fn nd_matrix_raw(&self, order: usize) -> Result<SpectralMatrix> {
        if order == 0 {
            return Err(FemError::InvalidOrder(order));
        }
        let m = self.mesh.boundary.len();
        // ∫ e^{ikθ} φ_j dθ = e^{ikθ_j}·Δθ·sinc²(kΔθ/2).
        let weight = |k: usize| {
            let x = 0.5 * k as f64 * self.step;
            let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
            self.step * sinc * sinc
        };
        let angles: Vec<f64> = (0..m).map(|j| self.mesh.boundary_angle(j)).collect();
        let loads = Mat::from_fn(m, 2 * order, |j, c| {
            let k = c / 2 + 1;
            let t = k as f64 * angles[j];
            weight(k) * if c % 2 == 0 { t.cos() } else { t.sin() }
        });
        // Columns solve independently against the shared factorization.
        let chunks: Vec<(usize, Mat<f64>)> = (0..order)
            .into_par_iter()
            .map(|k| {
                let block = Mat::from_fn(m, 2, |j, c| loads[(j, 2 * k + c)]);
                (k, self.solve_loads(&block))
            })
            .collect();
        let norm = 1.0 / (2.0 * PI).sqrt();
        // Trace for f_k, k > 0: (U_cos + i U_sin)/√(2π); negative modes conjugate.
        let mut traces = vec![vec![Complex64::new(0.0, 0.0); m]; order];
        for (k, u) in chunks {
            for j in 0..m {
                traces[k][j] = Complex64::new(u[(j, 0)], u[(j, 1)]) * norm;
            }
        }
        let d = 2 * order;
        let mode = |i: usize| eitmono_core::spectral::mode_of(order, i);
        let entries = DMatrix::from_fn(d, d, |i, c| {
            let (n, k) = (mode(i), mode(c));
            let trace = |j: usize| {
                let u = traces[k.unsigned_abs() as usize - 1][j];
                if k > 0 { u } else { u.conj() }
            };
            // ⟨u_k, f_n⟩ with the hat-function load of f_n.
            let w = weight(n.unsigned_abs() as usize) * norm;
            let sum: Complex64 = (0..m)
                .map(|j| trace(j) * Complex64::from_polar(1.0, -(n as f64) * angles[j]))
                .sum();
            sum * w
        });
        Ok(SpectralMatrix::from_entries(order, entries)?)
    }
}

/// Boundary trace of the mean-zero Neumann solution for density `g(θ)`.
pub fn solve_neumann(mesh: &DiskMesh, phantom: &Phantom, g: &dyn Fn(f64) -> f64) -> Result<Vec<f64>> {
    Ok(FemSystem::new(mesh.clone(), phantom)?.solve_neumann(g))
}

#[derive(Clone, Debug)]
pub struct FemNd {
    /// Hermitian and centrohermitian ND matrix.
    pub matrix: SpectralMatrix,
    /// `max |M − M*|` before symmetrization.
    pub hermitian_defect: f64,
    /// `max |M − J·conj(M)·J|` before symmetrization.
    pub centrohermitian_defect: f64,
    pub nodes: usize,
    pub elements: usize,
}

/// Symmetrized FEM ND matrix of the phantom on a given mesh.
pub fn nd_matrix_fem(mesh: &DiskMesh, phantom: &Phantom, order: usize) -> Result<FemNd> {
    let system = FemSystem::new(mesh.clone(), phantom)?;
    let raw = system.nd_matrix_raw(order)?;
    Ok(FemNd {
        hermitian_defect: raw.hermitian_defect(),
        centrohermitian_defect: raw.centrohermitian_defect(),
        matrix: raw.symmetrized(),
        nodes: mesh.node_count(),
        elements: mesh.element_count(),
    })
}

/// Meshes the phantom with target edge length `h` and assembles its ND matrix.
pub fn simulate(phantom: &Phantom, h: f64, order: usize) -> Result<FemNd> {
    nd_matrix_fem(&mesh_disk(phantom, h)?, phantom, order)
}

/// Like [`nd_matrix_fem`], with the discretization error of the homogeneous
/// part removed: `R_h(γ) − R_h(1) + R(1)` on the same mesh.
///
/// The uncorrected matrix carries a positive semidefinite bias of the order
/// of the mesh error even far from the inclusions, which swamps the high
/// modes of `R(1) − R(γ)`.
pub fn nd_matrix_fem_corrected(mesh: &DiskMesh, phantom: &Phantom, order: usize) -> Result<FemNd> {
    let fem = nd_matrix_fem(mesh, phantom, order)?;
    let background = FemSystem::background(mesh.clone())?.nd_matrix_raw(order)?.symmetrized();
    Ok(FemNd {
        matrix: &(&fem.matrix - &background) + &background_nd(order),
        ..fem
    })
}

/// Meshes the phantom and assembles its background-corrected ND matrix.
pub fn simulate_corrected(phantom: &Phantom, h: f64, order: usize) -> Result<FemNd> {
    nd_matrix_fem_corrected(&mesh_disk(phantom, h)?, phantom, order)
}
