//! Quadrature construction of `H_a⁺`, independent of the polynomial table.
//!
//! `(H_a)_{n,m} = (1/2π) ∫₀^{2π} e^{imθ}·e^{−inψ_a(θ)} dθ`, integrated with
//! composite Gauss–Legendre panels. The integrand oscillates up to
//! `n·(1+ρ)/(1−ρ)` times faster than `e^{inθ}` near `θ = ζ`, so the point count
//! has to grow with `(1+ρ)/(1−ρ)`.

use std::f64::consts::{PI, TAU};

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::HalfBlock;
use crate::{Error, Result};

const PANEL_ORDER: usize = 32;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Default point count `8·Ñ·⌈(1+ρ)/(1−ρ)⌉`.
pub fn default_quadrature_points(order: usize, rho: f64) -> usize {
    let stretch = ((1.0 + rho) / (1.0 - rho)).ceil() as usize;
    8 * order * stretch.max(1)
}

/// `H_a⁺` of order `order` from `q` quadrature points (rounded up to whole panels).
pub fn assemble_h_quadrature(a: Complex64, order: usize, q: usize) -> Result<HalfBlock> {
    let rho = a.norm();
    if rho >= 1.0 {
        return Err(Error::ParameterOutsideDisk(rho));
    }
    if rho > 0.95 {
        warn!("quadrature assembly at |a| = {rho:.4}: the integrand concentrates and accuracy degrades");
    }
    let zeta = if rho > 0.0 { a.arg() } else { 0.0 };
    let k = (1.0 + rho) / (1.0 - rho);
    let panels = q.div_ceil(PANEL_ORDER).max(1);
    let (x, w) = gauss_legendre(PANEL_ORDER);
    let h = TAU / panels as f64;

    let total = panels * PANEL_ORDER;
    let mut theta = Vec::with_capacity(total);
    let mut weight = Vec::with_capacity(total);
    for p in 0..panels {
        let left = p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            theta.push(left + 0.5 * h * (xi + 1.0));
            weight.push(0.5 * h * wi / TAU);
        }
    }
    // e^{−inψ} = (−1)^n·e^{−inζ}·e^{−2in·χ}, χ = atan2(k sin(x/2), cos(x/2)).
    let chi: Vec<f64> = theta
        .iter()
        .map(|t| {
            let half = 0.5 * (t - zeta);
            (k * half.sin()).atan2(half.cos())
        })
        .collect();
    let left = DMatrix::from_fn(order, total, |i, j| {
        let n = (i + 1) as f64;
        Complex64::from_polar(weight[j], -2.0 * n * chi[j])
    });
    let right = DMatrix::from_fn(total, order, |j, i| {
        let m = (i + 1) as f64;
        Complex64::from_polar(1.0, m * theta[j])
    });
    let mut block = left * right;
    for i in 0..order {
        let n = (i + 1) as f64;
        let sign = if (i + 1) % 2 == 1 { -1.0 } else { 1.0 };
        let factor = Complex64::from_polar(sign, -n * zeta);
        for j in 0..order {
            block[(i, j)] *= factor;
        }
    }
    Ok(HalfBlock::new(block))
}
