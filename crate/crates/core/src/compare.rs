//! Set differences between two reconstructions on the same tiling.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::engine::ReconResult;
use crate::{Error, Result};

/// Eigenvalue magnitude below which a disagreement is attributed to rounding.
pub const MACHINE_PRECISION_LABEL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffCell {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub eig_nonlin: f64,
    pub eig_lin: f64,
    pub near_machine_precision: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub e_abs: usize,
    pub e_rel: f64,
    pub total_cells: usize,
    /// Accepted by the first result only.
    pub only_nonlinear: Vec<DiffCell>,
    /// Accepted by the second result only.
    pub only_linear: Vec<DiffCell>,
}

impl DiffReport {
    /// Differing cells whose smaller eigenvalue magnitude exceeds the rounding label.
    pub fn significant(&self) -> usize {
        self.only_nonlinear
            .iter()
            .chain(&self.only_linear)
            .filter(|c| !c.near_machine_precision)
            .count()
    }
}

/// `e_abs = |S∖S′| + |S′∖S|` and `e_rel = e_abs/|S|`.
pub fn diff(nonlinear: &ReconResult, linear: &ReconResult) -> Result<DiffReport> {
    if !nonlinear.same_tiling(linear) {
        return Err(Error::TilingMismatch);
    }
    let mut only_nonlinear = Vec::new();
    let mut only_linear = Vec::new();
    for (a, b) in nonlinear.cells.iter().zip(&linear.cells) {
        if a.accepted == b.accepted {
            continue;
        }
        let cell = DiffCell {
            index: a.index,
            x: a.x,
            y: a.y,
            eig_nonlin: a.smallest_eigenvalue,
            eig_lin: b.smallest_eigenvalue,
            near_machine_precision: a.smallest_eigenvalue.abs().min(b.smallest_eigenvalue.abs())
                < MACHINE_PRECISION_LABEL,
        };
        if a.accepted {
            only_nonlinear.push(cell);
        } else {
            only_linear.push(cell);
        }
    }
    let total_cells = nonlinear.cells.len();
    let e_abs = only_nonlinear.len() + only_linear.len();
    Ok(DiffReport {
        e_abs,
        e_rel: if total_cells == 0 { 0.0 } else { e_abs as f64 / total_cells as f64 },
        total_cells,
        only_nonlinear,
        only_linear,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub example: String,
    pub delta: f64,
    pub mu: f64,
    pub e_abs: usize,
    pub e_rel: f64,
    pub total_cells: usize,
}

/// Writes `example,delta,mu,e_abs,e_rel,total_cells` rows.
pub fn write_table<W: Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
