//! Structured additive noise `E^δ` with exact operator-norm calibration.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::spectral::{SpectralMatrix, Structure};
use crate::{Error, Result};

/// Hermitian defect tolerated by [`operator_norm`], relative to the largest entry.
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidNoiseLevel(delta));
        }
        Ok(Self { delta, seed })
    }
}

/// Largest eigenvalue magnitude of a Hermitian matrix.
pub fn operator_norm(m: &SpectralMatrix) -> Result<f64> {
    let scale = m.entries().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOL * scale.max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(m
        .hermitian_eigenvalues()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max))
}

/// `E^δ = δ·E⁴/‖E⁴‖` where `E⁴` is the Hermitian, centrohermitian part of a
/// complex Gaussian matrix multiplied entrywise by the datum `A`.
pub fn make_noise(a: &SpectralMatrix, spec: &NoiseSpec) -> Result<SpectralMatrix> {
    NoiseSpec::new(spec.delta, spec.seed)?;
    let order = a.order();
    if spec.delta == 0.0 {
        return Ok(SpectralMatrix::zeros(order).with_structure(a.structure()));
    }
    if a.entries().iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Err(Error::ZeroDatum);
    }
    let d = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draws = Vec::with_capacity(d * d);
    for _ in 0..d * d {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        draws.push(Complex64::new(re, im));
    }
    // Row-major draw order.
    let e1 = SpectralMatrix::from_entries(order, DMatrix::from_fn(d, d, |i, j| draws[i * d + j]))?;
    let e3 = e1.symmetrized();
    let e4 = DMatrix::from_fn(d, d, |i, j| e3.entries()[(i, j)] * a.entries()[(i, j)]);
    // A product with an exactly structured datum is already structured; the
    // second pass only removes rounding-level asymmetry of the datum.
    let e4 = SpectralMatrix::from_entries(order, e4)?.symmetrized();
    let norm = operator_norm(&e4)?;
    if norm == 0.0 {
        return Err(Error::ZeroDatum);
    }
    let structure = Structure {
        block_diagonal: a.structure().block_diagonal,
        ..Structure::SYMMETRIC
    };
    Ok(e4.scaled(spec.delta / norm).with_structure(structure))
}
