//! ND matrices of concentric and arbitrary balls, and the Fréchet derivative.
//!
//! For a ball `B` with `M_a(B) = B_{0,r}` the positive block of the ND matrix
//! is `A⁺ = (H_a⁺)*·D⁺·H_a⁺` where `D⁺ = diag(λ_k)`. Because the same identity
//! holds for the background, `(H_a⁺)*·diag(1/k)·H_a⁺ = diag(1/k)`, the block is
//! assembled as
//!
//! ```text
//! A⁺ = diag(1/n) + Φ*·(H_ρᵀ·diag(λ_k − 1/k)·H_ρ)·Φ,   Φ = diag(e^{imζ})
//! ```
//!
//! The weights `λ_k − 1/k` decay like `r^{2k}`, so the truncated sum over
//! `k ≤ Ñ` converges even when `|a|` is close to one and the columns of `H_ρ`
//! still carry energy beyond `Ñ`. The literal triple product is kept as
//! [`nd_ball_explicit`].

use std::sync::Arc;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::coefficients::{shared_table, FixedSquare, HCoefficients};
use super::{HalfBlock, SpectralMatrix, Structure, TruncationPlan};
use crate::mobius::{ball_to_concentric, Ball, MobiusParams};
use crate::{Error, Result};

fn check_contrast(beta: f64) -> Result<()> {
    if beta > -1.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidContrast(beta))
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidRadius(r))
    }
}

fn check_precision(bits: u32) -> Result<()> {
    if bits >= 64 {
        Ok(())
    } else {
        Err(Error::PrecisionTooLow(bits))
    }
}

/// `λ_n = [(2 + β(1 − r^{2n}))/(2 + β(1 + r^{2n}))]/n` for `n = 1..=order`.
pub fn concentric_eigenvalues(beta: f64, r: f64, order: usize) -> Result<Vec<f64>> {
    check_contrast(beta)?;
    check_radius(r)?;
    Ok((1..=order)
        .map(|n| {
            let s = r.powi(2 * n as i32);
            (2.0 + beta * (1.0 - s)) / (2.0 + beta * (1.0 + s)) / n as f64
        })
        .collect())
}

/// `λ_n − 1/n = −2βr^{2n}/((2 + β(1 + r^{2n}))·n)`, without cancellation.
pub fn eigenvalue_perturbation(beta: f64, r: f64, order: usize) -> Result<Vec<f64>> {
    check_contrast(beta)?;
    check_radius(r)?;
    Ok((1..=order)
        .map(|n| {
            let s = r.powi(2 * n as i32);
            -2.0 * beta * s / (2.0 + beta * (1.0 + s)) / n as f64
        })
        .collect())
}

/// ND matrix of the homogeneous disk, `diag(1/|n|)`.
pub fn background_nd(order: usize) -> SpectralMatrix {
    let values: Vec<f64> = (1..=order).map(|n| 1.0 / n as f64).collect();
    SpectralMatrix::from_symmetric_diagonal(&values)
}

/// ND matrix of `γ = 1 + β·χ_{B_{0,r}}`.
pub fn concentric_nd(beta: f64, r: f64, order: usize) -> Result<SpectralMatrix> {
    Ok(SpectralMatrix::from_symmetric_diagonal(&concentric_eigenvalues(
        beta, r, order,
    )?))
}

fn evaluate_window(table: &HCoefficients, rho: f64, rows: usize, cols: usize, bits: u32) -> DMatrix<f64> {
    let x = FixedSquare::new(rho, bits);
    let values: Vec<Vec<f64>> = (1..=rows)
        .into_par_iter()
        .map(|n| (1..=cols).map(|m| table.poly(n, m).evaluate(&x)).collect())
        .collect();
    DMatrix::from_fn(rows, cols, |i, j| values[i][j])
}

/// `(H_ρ)_{n,m}` for `n ∈ 1..=rows`, `m ∈ 1..=cols`, stored at `(n − 1, m − 1)`.
pub fn h_rho_window(rho: f64, rows: usize, cols: usize, precision_bits: u32) -> Result<DMatrix<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::ParameterOutsideDisk(rho));
    }
    check_precision(precision_bits)?;
    let table: Arc<HCoefficients> = shared_table(rows, cols);
    Ok(evaluate_window(&table, rho, rows, cols, precision_bits))
}

fn phase(shift: i64, zeta: f64) -> Complex64 {
    if shift == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, shift as f64 * zeta)
    }
}

fn parameter_angle(a: Complex64) -> f64 {
    if a.norm() > 0.0 {
        a.arg()
    } else {
        0.0
    }
}

/// `H_a⁺` with `(H_a)_{n,m} = e^{i(m−n)ζ}·(H_ρ)_{n,m}`, `n, m = 1..=order`.
pub fn assemble_h_plus(a: Complex64, order: usize, precision_bits: u32) -> Result<HalfBlock> {
    let rho = a.norm();
    if rho >= 1.0 {
        return Err(Error::ParameterOutsideDisk(rho));
    }
    let zeta = parameter_angle(a);
    let h = h_rho_window(rho, order, order, precision_bits)?;
    Ok(HalfBlock::new(DMatrix::from_fn(order, order, |i, j| {
        phase(j as i64 - i as i64, zeta) * h[(i, j)]
    })))
}

/// Max-norm deviation of the central `n × n` block of `H·H` from the identity.
///
/// For a block-structured `H_a` the negative block is the conjugate
/// reflection of the positive one, so checking `H⁺·H⁺` suffices.
pub fn involution_residual(h: &HalfBlock, n: usize) -> f64 {
    assert!(n >= 1 && n <= h.order(), "central order {n} outside 1..={}", h.order());
    let rows = h.entries.rows(0, n);
    let cols = h.entries.columns(0, n);
    let product = rows * cols;
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((product[(i, j)] - target).norm());
        }
    }
    worst
}

/// [`involution_residual`] of `H_a` at `|a| = rho` without assembling the
/// full block: only the `n × Ñ` row window and the `Ñ × n` column window
/// enter. The phases `e^{i(m−n)ζ}` cancel in the residual.
pub fn involution_residual_rho(rho: f64, assembly_order: usize, n: usize, precision_bits: u32) -> Result<f64> {
    let cols = h_rho_window(rho, assembly_order, n, precision_bits)?;
    let rows = h_rho_window(rho, n, assembly_order, precision_bits)?;
    Ok(residual_from_windows(&rows, &cols))
}

pub(crate) fn residual_from_windows(rows: &DMatrix<f64>, cols: &DMatrix<f64>) -> f64 {
    let product = rows * cols;
    let mut worst = 0.0f64;
    for j in 0..product.ncols() {
        for i in 0..product.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((product[(i, j)] - target).abs());
        }
    }
    worst
}

/// `A⁺ − diag(1/n)` for the ball with Möbius parameters `params`, given the
/// `Ñ × N` window of `H_ρ` columns at `ρ = |a|`. Exactly Hermitian.
pub fn ball_perturbation_block(params: &MobiusParams, beta: f64, columns: &DMatrix<f64>) -> Result<DMatrix<Complex64>> {
    let (assembly_order, n) = columns.shape();
    let delta = eigenvalue_perturbation(beta, params.r, assembly_order)?;
    let weighted = DMatrix::from_fn(assembly_order, n, |k, m| delta[k] * columns[(k, m)]);
    let g = columns.transpose() * weighted;
    let zeta = params.zeta();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        out[(j, j)] = Complex64::new(g[(j, j)], 0.0);
        for i in 0..j {
            let v = phase(j as i64 - i as i64, zeta) * g[(i, j)];
            out[(i, j)] = v;
            out[(j, i)] = v.conj();
        }
    }
    Ok(out)
}

/// ND matrix of a ball together with the involution residual that certifies
/// the assembly order for its `|a|`.
#[derive(Clone, Debug)]
pub struct BallNd {
    pub matrix: SpectralMatrix,
    pub involution_residual: f64,
    pub within_tolerance: bool,
}

fn plus_from_perturbation(mut block: DMatrix<Complex64>) -> DMatrix<Complex64> {
    for k in 0..block.nrows() {
        block[(k, k)] += 1.0 / (k + 1) as f64;
    }
    block
}

/// ND matrix of `γ = 1 + β·χ_B`, central `2N × 2N` part of the order-`Ñ` assembly.
pub fn nd_ball(ball: &Ball, beta: f64, plan: &TruncationPlan) -> Result<BallNd> {
    plan.validate()?;
    check_contrast(beta)?;
    let params = ball_to_concentric(ball)?;
    let (big_n, big_nt) = (plan.data_order, plan.assembly_order);
    let columns = h_rho_window(params.rho(), big_nt, big_n, plan.precision_bits)?;
    let rows = h_rho_window(params.rho(), big_n, big_nt, plan.precision_bits)?;
    let residual = residual_from_windows(&rows, &columns);
    let within_tolerance = residual <= plan.involution_tol;
    if !within_tolerance {
        warn!(
            "involution residual {residual:.3e} exceeds {:.1e} at |a| = {:.6}; assembly order {big_nt} may be too small",
            plan.involution_tol,
            params.rho()
        );
    }
    let plus = plus_from_perturbation(ball_perturbation_block(&params, beta, &columns)?);
    Ok(BallNd {
        matrix: SpectralMatrix::from_positive_block(&plus, Structure::ALL),
        involution_residual: residual,
        within_tolerance,
    })
}

/// The literal product `(H_a⁺)*·D⁺·H_a⁺` restricted to the central block.
/// Loses accuracy as `|a| → 1`; kept as a cross-check of [`nd_ball`].
pub fn nd_ball_explicit(ball: &Ball, beta: f64, plan: &TruncationPlan) -> Result<SpectralMatrix> {
    plan.validate()?;
    let params = ball_to_concentric(ball)?;
    let (big_n, big_nt) = (plan.data_order, plan.assembly_order);
    let lambda = concentric_eigenvalues(beta, params.r, big_nt)?;
    let columns = h_rho_window(params.rho(), big_nt, big_n, plan.precision_bits)?;
    let zeta = params.zeta();
    let h = DMatrix::from_fn(big_nt, big_n, |k, m| phase(m as i64 - k as i64, zeta) * columns[(k, m)]);
    let dh = DMatrix::from_fn(big_nt, big_n, |k, m| h[(k, m)] * lambda[k]);
    let plus = h.adjoint() * dh;
    Ok(SpectralMatrix::from_positive_block(&plus, Structure::NONE))
}

fn pascal(order: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for n in 1..order {
        let prev = &rows[n - 1];
        let mut row = vec![1.0; n + 1];
        for k in 1..n {
            row[k] = prev[k - 1] + prev[k];
        }
        rows.push(row);
    }
    rows
}

/// Positive block of the Fréchet derivative `A′ = R′(1)χ_B`:
///
/// ```text
/// A′_{n,m} = −e^{i(m−n)ζ} Σ_{k=0}^{min(n,m)−1} C(m−1,k)·C(n−1,k)·c^{m+n−2k−2}·R^{2k+2}/(k+1)
/// ```
pub fn frechet_plus_block(ball: &Ball, order: usize) -> Result<DMatrix<Complex64>> {
    if !ball.is_strictly_inside() || !(ball.radius > 0.0) {
        return Err(Error::BallNotInside {
            cx: ball.center.re,
            cy: ball.center.im,
            radius: ball.radius,
        });
    }
    if order == 0 {
        return Err(Error::InvalidOrder("order must be at least 1".into()));
    }
    let c = ball.center.norm();
    let big_r = ball.radius;
    let zeta = parameter_angle(ball.center);
    let binom = pascal(order);
    let mut out = DMatrix::zeros(order, order);
    for m in 1..=order {
        for n in 1..=m {
            let mut sum = 0.0;
            for k in 0..n {
                sum += binom[m - 1][k] * binom[n - 1][k] * c.powi((m + n - 2 * k - 2) as i32)
                    * big_r.powi(2 * k as i32 + 2)
                    / (k + 1) as f64;
            }
            let v = -phase(m as i64 - n as i64, zeta) * sum;
            out[(n - 1, m - 1)] = v;
            out[(m - 1, n - 1)] = v.conj();
        }
    }
    Ok(out)
}

/// Fréchet derivative `R′(1)χ_B` in the Fourier basis, order `N`.
pub fn frechet_ball(ball: &Ball, order: usize) -> Result<SpectralMatrix> {
    Ok(SpectralMatrix::from_positive_block(
        &frechet_plus_block(ball, order)?,
        Structure::ALL,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_diff(a: &SpectralMatrix, b: &SpectralMatrix) -> f64 {
        (a - b).entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn eigenvalue_examples() {
        let l = concentric_eigenvalues(1.0, 0.5, 3).unwrap();
        assert_abs_diff_eq!(l[0], 11.0 / 13.0, epsilon = 1e-15);
        let l = concentric_eigenvalues(4.0, 0.5, 3).unwrap();
        assert_abs_diff_eq!(l[0], 5.0 / 7.0, epsilon = 1e-15);
        let l = concentric_eigenvalues(0.0, 0.37, 5).unwrap();
        for (k, v) in l.iter().enumerate() {
            assert_eq!(*v, 1.0 / (k + 1) as f64);
        }
    }

    #[test]
    fn eigenvalue_argument_checks() {
        assert!(matches!(concentric_eigenvalues(-1.0, 0.5, 2), Err(Error::InvalidContrast(_))));
        assert!(matches!(concentric_eigenvalues(1.0, 1.0, 2), Err(Error::InvalidRadius(_))));
        assert!(concentric_eigenvalues(1.0, 0.0, 2).is_err());
    }

    #[test]
    fn perturbation_matches_difference() {
        let l = concentric_eigenvalues(4.0, 0.6, 20).unwrap();
        let d = eigenvalue_perturbation(4.0, 0.6, 20).unwrap();
        for k in 0..20 {
            assert_abs_diff_eq!(l[k] - 1.0 / (k + 1) as f64, d[k], epsilon = 1e-15);
        }
    }

    #[test]
    fn eigenvalues_decrease_in_radius_and_contrast() {
        for n in 1..=16usize {
            let lam = |beta: f64, r: f64| concentric_eigenvalues(beta, r, n).unwrap()[n - 1];
            for beta in [0.5, 4.0] {
                assert!(lam(beta, 0.3) > lam(beta, 0.5));
            }
            assert!(lam(1.0, 0.7) > lam(2.0, 0.7));
            assert!(lam(4.0, 0.9) > 0.0 && lam(4.0, 0.9) <= 1.0 / n as f64);
        }
    }

    #[test]
    fn background_examples() {
        let one = background_nd(1);
        assert_eq!(one.entries(), &DMatrix::identity(2, 2));
        let three = background_nd(3);
        let diag: Vec<f64> = (0..6).map(|i| three.entries()[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0 / 3.0, 0.5, 1.0, 1.0, 0.5, 1.0 / 3.0]);
        assert_eq!(three.off_block_magnitude(), 0.0);
        assert_eq!(&concentric_nd(0.0, 0.42, 3).unwrap(), &three);
    }

    #[test]
    fn h_plus_examples() {
        let h = assemble_h_plus(c(0.0, 0.0), 12, 256).unwrap();
        for n in 1..=12 {
            for m in 1..=12 {
                let expected = if n != m {
                    0.0
                } else if n % 2 == 1 {
                    -1.0
                } else {
                    1.0
                };
                assert_eq!(h.get(n, m), c(expected, 0.0));
            }
        }
        assert_eq!(involution_residual(&h, 12), 0.0);

        let h = assemble_h_plus(c(0.5, 0.0), 4, 256).unwrap();
        assert_abs_diff_eq!((h.get(1, 1) - c(-0.75, 0.0)).norm(), 0.0, epsilon = 1e-15);

        let h = assemble_h_plus(Complex64::from_polar(0.5, FRAC_PI_2), 4, 256).unwrap();
        assert_abs_diff_eq!((h.get(1, 2) - c(0.0, -0.375)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn h_plus_rejects_parameter_on_circle() {
        assert!(assemble_h_plus(c(1.0, 0.0), 4, 256).is_err());
        assert!(assemble_h_plus(c(0.5, 0.0), 4, 32).is_err());
    }

    #[test]
    fn h_columns_match_power_series() {
        // (H_a)_{n,m} = conj of the z^m coefficient of M_a(z)^n, from the
        // geometric series of (a − z)^n/(1 − āz)^n.
        let a = Complex64::from_polar(0.6, 0.9);
        let order = 10;
        let h = assemble_h_plus(a, order, 256).unwrap();
        let series: Vec<Complex64> = {
            // M_a(z) = (a − z)·Σ_j (āz)^j truncated.
            let mut s = vec![c(0.0, 0.0); order + 1];
            for (j, v) in s.iter_mut().enumerate() {
                *v += a * a.conj().powi(j as i32);
                if j > 0 {
                    *v -= a.conj().powi(j as i32 - 1);
                }
            }
            s
        };
        let mut power = vec![c(0.0, 0.0); order + 1];
        power[0] = c(1.0, 0.0);
        for n in 1..=order {
            let mut next = vec![c(0.0, 0.0); order + 1];
            for (i, p) in power.iter().enumerate() {
                for (j, s) in series.iter().enumerate() {
                    if i + j <= order {
                        next[i + j] += p * s;
                    }
                }
            }
            power = next;
            for m in 1..=order {
                assert!((h.get(n, m) - power[m].conj()).norm() < 1e-12, "({n},{m})");
            }
        }
    }

    #[test]
    fn involution_examples() {
        let h = assemble_h_plus(c(0.5, 0.0), 200, 256).unwrap();
        assert!(involution_residual(&h, 16) < 1e-10);
        let h = assemble_h_plus(c(0.5, 0.0), 4, 256).unwrap();
        assert!(involution_residual(&h, 4) >= 1e-1);
        let direct = involution_residual_rho(0.5, 200, 16, 256).unwrap();
        assert!(direct < 1e-10);
    }

    #[test]
    fn windowed_residual_matches_full_block() {
        let a = Complex64::from_polar(0.7, -1.3);
        let h = assemble_h_plus(a, 60, 256).unwrap();
        let full = involution_residual(&h, 8);
        let windowed = involution_residual_rho(0.7, 60, 8, 256).unwrap();
        assert_abs_diff_eq!(full, windowed, epsilon = 1e-13);
    }

    #[test]
    fn centered_ball_gives_eigenvalue_diagonal() {
        let plan = TruncationPlan::new(16, 200).unwrap();
        let nd = nd_ball(&Ball::from_xy(0.0, 0.0, 0.45).unwrap(), 4.0, &plan).unwrap();
        let expected = concentric_nd(4.0, 0.45, 16).unwrap();
        assert!(max_diff(&nd.matrix, &expected) < 1e-15);
        assert!(nd.within_tolerance);
    }

    #[test]
    fn zero_contrast_gives_background() {
        let plan = TruncationPlan::new(8, 200).unwrap();
        let ball = Ball::from_xy(0.3, -0.2, 0.35).unwrap();
        let nd = nd_ball(&ball, 0.0, &plan).unwrap();
        assert_eq!(max_diff(&nd.matrix, &background_nd(8)), 0.0);
        // The explicit product needs H*·diag(1/k)·H = diag(1/k) to hold numerically.
        let explicit = nd_ball_explicit(&ball, 0.0, &plan).unwrap();
        assert!(max_diff(&explicit, &background_nd(8)) < 1e-10);
    }

    #[test]
    fn explicit_and_perturbative_assembly_agree() {
        let plan = TruncationPlan::new(12, 200).unwrap();
        let ball = Ball::new(Complex64::from_polar(0.35, 2.0), 0.3).unwrap();
        let nd = nd_ball(&ball, 4.0, &plan).unwrap();
        let explicit = nd_ball_explicit(&ball, 4.0, &plan).unwrap();
        assert!(max_diff(&nd.matrix, &explicit) < 1e-10);
    }

    #[test]
    fn structure_of_assembled_matrices() {
        let plan = TruncationPlan::new(16, 120).unwrap();
        for (ball, beta) in [
            (Ball::from_xy(0.4, 0.0, 0.4).unwrap(), 4.0),
            (Ball::new(Complex64::from_polar(0.5, 2.5), 0.2).unwrap(), 0.7),
            (Ball::from_xy(-0.1, -0.6, 0.25).unwrap(), -0.5),
        ] {
            let a = nd_ball(&ball, beta, &plan).unwrap().matrix;
            assert!(a.hermitian_defect() < 1e-12);
            assert!(a.centrohermitian_defect() < 1e-12);
            assert!(a.off_block_magnitude() < 1e-12);
            assert!(a.min_eigenvalue() > 0.0);
            let f = frechet_ball(&ball, 16).unwrap();
            assert!(f.hermitian_defect() < 1e-12);
            assert!(f.centrohermitian_defect() < 1e-12);
            assert!(f.off_block_magnitude() < 1e-12);
            assert!(f.hermitian_eigenvalues().last().unwrap() <= &1e-14);
        }
    }

    #[test]
    fn frechet_examples() {
        let f = frechet_ball(&Ball::from_xy(0.0, 0.0, 0.6).unwrap(), 6).unwrap();
        for n in 1..=6i64 {
            for m in 1..=6i64 {
                let expected = if n == m { -0.6f64.powi(2 * n as i32) / n as f64 } else { 0.0 };
                assert_abs_diff_eq!((f.get(n, m) - c(expected, 0.0)).norm(), 0.0, epsilon = 1e-15);
            }
        }
        let ball = Ball::new(Complex64::from_polar(0.4, 1.0), 0.25).unwrap();
        let f = frechet_ball(&ball, 4).unwrap();
        assert_abs_diff_eq!((f.get(1, 1) - c(-0.0625, 0.0)).norm(), 0.0, epsilon = 1e-16);
        assert!(frechet_ball(&Ball::from_xy(0.5, 0.0, 0.5).unwrap(), 4).is_err());
    }

    #[test]
    fn frechet_quotient_converges_linearly() {
        let plan = TruncationPlan::new(16, 200).unwrap();
        let ball = Ball::from_xy(0.4, 0.0, 0.2).unwrap();
        let derivative = frechet_ball(&ball, 16).unwrap();
        let background = background_nd(16);
        let errors: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&beta| {
                let a = nd_ball(&ball, beta, &plan).unwrap().matrix;
                (&(&a - &background).scaled(1.0 / beta) - &derivative).norm2()
            })
            .collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn rotation_covariance() {
        let plan = TruncationPlan::new(16, 150).unwrap();
        let ball = Ball::from_xy(0.35, 0.1, 0.3).unwrap();
        let phi = 0.77;
        let a = nd_ball(&ball, 4.0, &plan).unwrap().matrix;
        let rotated = nd_ball(&ball.rotated(phi), 4.0, &plan).unwrap().matrix;
        assert!(max_diff(&rotated, &a.rotated(phi)) < 1e-10);
        let f = frechet_ball(&ball, 16).unwrap();
        let fr = frechet_ball(&ball.rotated(phi), 16).unwrap();
        assert!(max_diff(&fr, &f.rotated(phi)) < 1e-12);
    }

    #[test]
    fn nested_concentric_balls_are_ordered() {
        let inner = concentric_nd(4.0, 0.3, 16).unwrap();
        let outer = concentric_nd(4.0, 0.5, 16).unwrap();
        assert!((&inner - &outer).min_eigenvalue() >= -1e-12);
        let plan = TruncationPlan::new(16, 200).unwrap();
        let big = Ball::from_xy(0.2, 0.1, 0.5).unwrap();
        let small = Ball::from_xy(0.25, 0.15, 0.2).unwrap();
        let diff = &nd_ball(&small, 4.0, &plan).unwrap().matrix - &nd_ball(&big, 4.0, &plan).unwrap().matrix;
        assert!(diff.min_eigenvalue() >= -1e-12);
    }

    #[test]
    fn near_boundary_ball_is_converged_in_assembly_order() {
        // |a| ≈ 0.98 here: the involution residual at Ñ = 200 is large, but the
        // perturbation weights decay like r^{2k} and the assembly has converged.
        let ball = Ball::new(Complex64::from_polar(0.97, FRAC_PI_4), 0.025).unwrap();
        let nd = nd_ball(&ball, 4.0, &TruncationPlan::new(16, 200).unwrap()).unwrap();
        assert!(!nd.within_tolerance);
        let finer = nd_ball(&ball, 4.0, &TruncationPlan::new(16, 300).unwrap()).unwrap();
        assert!((&nd.matrix - &finer.matrix).norm2() < 1e-15);
        let a = &nd.matrix;
        assert!(a.hermitian_defect() < 1e-12);
        let pert = a - &background_nd(16);
        assert!(pert.hermitian_eigenvalues().last().unwrap() <= &1e-12);
        // Small-inclusion limit: A − R(1) ≈ 2β/(2+β)·A′.
        let polarization = frechet_ball(&ball, 16).unwrap().scaled(4.0 / 3.0);
        assert!((&pert - &polarization).norm2() < 0.2 * pert.norm2());
    }
}
