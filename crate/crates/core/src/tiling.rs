//! Flat-topped regular hexagonal tiling of the unit disk.
//!
//! Cells sit on the axial lattice `C = (1.5·q·R, √3·(r + q/2)·R)` with one cell
//! at the origin. Each cell is tested through its circumscribed ball
//! `B_{C,R}`, whose boundary passes through the hexagon corners.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::mobius::Ball;
use crate::{Error, Result};

/// Relative margin below which `|C| + R` counts as touching the unit circle.
const BOUNDARY_MARGIN: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HexCell {
    pub index: usize,
    pub q: i32,
    pub r: i32,
    pub center: [f64; 2],
}

impl HexCell {
    /// `q² + qr + r²`, so that `|C|² = 3R²·shell`. Cells related by a lattice
    /// symmetry share it exactly.
    pub fn shell(&self) -> u64 {
        let (q, r) = (self.q as i64, self.r as i64);
        (q * q + q * r + r * r) as u64
    }

    pub fn center_complex(&self) -> Complex64 {
        Complex64::new(self.center[0], self.center[1])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HexTiling {
    pub hex_radius: f64,
    pub cells: Vec<HexCell>,
}

/// Lattice center of axial coordinates `(q, r)`.
pub fn axial_center(q: i32, r: i32, hex_radius: f64) -> [f64; 2] {
    [
        1.5 * q as f64 * hex_radius,
        3f64.sqrt() * (r as f64 + 0.5 * q as f64) * hex_radius,
    ]
}

/// Tiling with every cell whose circumscribed ball stays off the unit circle,
/// `|C| + R_hex < 1`.
pub fn hex_tiling(hex_radius: f64) -> Result<HexTiling> {
    if !(hex_radius > 0.0 && hex_radius < 1.0) {
        return Err(Error::InvalidHexRadius(hex_radius));
    }
    let reach = (1.0 / (1.5 * hex_radius)).ceil() as i32 + 1;
    let mut cells = Vec::new();
    for q in -reach..=reach {
        for r in -2 * reach..=2 * reach {
            let (qi, ri) = (q as i64, r as i64);
            let shell = (qi * qi + qi * ri + ri * ri) as f64;
            let distance = (3.0 * shell).sqrt() * hex_radius;
            if distance + hex_radius < 1.0 - BOUNDARY_MARGIN {
                cells.push(HexCell {
                    index: cells.len(),
                    q,
                    r,
                    center: axial_center(q, r, hex_radius),
                });
            }
        }
    }
    Ok(HexTiling { hex_radius, cells })
}

impl HexTiling {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `|C|` computed from the lattice shell, identical across symmetric cells.
    pub fn center_distance(&self, cell: &HexCell) -> f64 {
        (3.0 * cell.shell() as f64).sqrt() * self.hex_radius
    }

    /// Circumscribed ball of a cell.
    pub fn ball(&self, cell: &HexCell) -> Ball {
        Ball {
            center: cell.center_complex(),
            radius: self.hex_radius,
        }
    }

    /// Corners of the flat-topped hexagon, counter-clockwise from angle 0.
    pub fn vertices(&self, cell: &HexCell) -> [[f64; 2]; 6] {
        let mut out = [[0.0; 2]; 6];
        for (k, v) in out.iter_mut().enumerate() {
            let t = PI / 3.0 * k as f64;
            *v = [
                cell.center[0] + self.hex_radius * t.cos(),
                cell.center[1] + self.hex_radius * t.sin(),
            ];
        }
        out
    }

    /// Point strictly inside the hexagon of `cell`, with relative slack `tol`.
    pub fn hexagon_contains(&self, cell: &HexCell, p: [f64; 2], tol: f64) -> bool {
        let v = self.vertices(cell);
        (0..6).all(|k| {
            let a = v[k];
            let b = v[(k + 1) % 6];
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            cross > tol * self.hex_radius * self.hex_radius
        })
    }

    /// Same lattice and cell set.
    pub fn matches(&self, other: &HexTiling) -> bool {
        self.hex_radius == other.hex_radius
            && self.cells.len() == other.cells.len()
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a.q == b.q && a.r == b.r)
    }

    /// Cell containing `p` in its hexagon, if any.
    pub fn locate(&self, p: [f64; 2]) -> Option<&HexCell> {
        self.cells.iter().find(|c| self.hexagon_contains(c, p, -1e-12))
    }
}
