//! File formats for ND matrices and reconstruction results.
//!
//! Matrices are stored row-major in index order `−N..−1, 1..N`, each entry as
//! an interleaved `(re, im)` pair. The binary form is little-endian `f64`; the
//! CSV form has one matrix row per line with `2·2N` columns.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::engine::{CellOutcome, ReconMetadata, ReconResult};
use crate::spectral::SpectralMatrix;
use crate::{Error, Result};

fn order_from_dim(entries: usize) -> Result<usize> {
    let d = (entries as f64).sqrt().round() as usize;
    if d * d != entries || d == 0 || !d.is_multiple_of(2) {
        return Err(Error::Format(format!("{entries} entries do not form a 2N×2N matrix")));
    }
    Ok(d / 2)
}

fn from_row_major(values: &[f64]) -> Result<SpectralMatrix> {
    if !values.len().is_multiple_of(2) {
        return Err(Error::Format("odd number of real values".into()));
    }
    let n = order_from_dim(values.len() / 2)?;
    let d = 2 * n;
    let m = DMatrix::from_fn(d, d, |i, j| {
        let k = 2 * (i * d + j);
        Complex64::new(values[k], values[k + 1])
    });
    SpectralMatrix::from_entries(n, m)
}

pub fn matrix_to_bytes(m: &SpectralMatrix) -> Vec<u8> {
    let d = m.dim();
    let e = m.entries();
    let mut out = Vec::with_capacity(16 * d * d);
    for i in 0..d {
        for j in 0..d {
            out.extend_from_slice(&e[(i, j)].re.to_le_bytes());
            out.extend_from_slice(&e[(i, j)].im.to_le_bytes());
        }
    }
    out
}

pub fn matrix_from_bytes(bytes: &[u8]) -> Result<SpectralMatrix> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Format("length is not a multiple of 8 bytes".into()));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    from_row_major(&values)
}

pub fn write_matrix_bin(path: &Path, m: &SpectralMatrix) -> Result<()> {
    fs::write(path, matrix_to_bytes(m))?;
    Ok(())
}

pub fn read_matrix_bin(path: &Path) -> Result<SpectralMatrix> {
    matrix_from_bytes(&fs::read(path)?)
}

pub fn write_matrix_csv<W: Write>(m: &SpectralMatrix, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    let d = m.dim();
    for i in 0..d {
        let row: Vec<String> = (0..d)
            .flat_map(|j| {
                let z = m.entries()[(i, j)];
                [format!("{:e}", z.re), format!("{:e}", z.im)]
            })
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: std::io::Read>(input: R) -> Result<SpectralMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut values = Vec::new();
    for record in r.records() {
        for field in record?.iter() {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number '{field}': {e}")))?,
            );
        }
    }
    from_row_major(&values)
}

/// Reads `.bin` as binary and anything else as CSV.
pub fn read_matrix(path: &Path) -> Result<SpectralMatrix> {
    if path.extension().is_some_and(|e| e == "bin") {
        read_matrix_bin(path)
    } else {
        read_matrix_csv(BufReader::new(fs::File::open(path)?))
    }
}

pub fn write_matrix(path: &Path, m: &SpectralMatrix) -> Result<()> {
    if path.extension().is_some_and(|e| e == "bin") {
        write_matrix_bin(path, m)
    } else {
        write_matrix_csv(m, fs::File::create(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct CellRow {
    cell: usize,
    x: f64,
    y: f64,
    smallest_eigenvalue: f64,
    accepted: u8,
}

pub fn write_cells_csv<W: Write>(cells: &[CellOutcome], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in cells {
        w.serialize(CellRow {
            cell: c.index,
            x: c.x,
            y: c.y,
            smallest_eigenvalue: c.smallest_eigenvalue,
            accepted: c.accepted as u8,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cells_csv<R: std::io::Read>(input: R) -> Result<Vec<CellOutcome>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<CellRow>()
        .map(|row| {
            let row = row?;
            Ok(CellOutcome {
                index: row.cell,
                x: row.x,
                y: row.y,
                smallest_eigenvalue: row.smallest_eigenvalue,
                accepted: row.accepted != 0,
            })
        })
        .collect()
}

/// Writes `<stem>.csv` and `<stem>.json`.
pub fn write_result(stem: &Path, result: &ReconResult) -> Result<()> {
    if let Some(parent) = stem.parent() {
        fs::create_dir_all(parent)?;
    }
    write_cells_csv(&result.cells, fs::File::create(stem.with_extension("csv"))?)?;
    let mut json = serde_json::to_string_pretty(&result.metadata)?;
    json.push('\n');
    fs::write(stem.with_extension("json"), json)?;
    Ok(())
}

pub fn read_result(stem: &Path) -> Result<ReconResult> {
    let cells = read_cells_csv(fs::File::open(stem.with_extension("csv"))?)?;
    let metadata: ReconMetadata =
        serde_json::from_reader(BufReader::new(fs::File::open(stem.with_extension("json"))?))?;
    if metadata.cell_count != cells.len() {
        return Err(Error::Format(format!(
            "metadata lists {} cells, CSV has {}",
            metadata.cell_count,
            cells.len()
        )));
    }
    Ok(ReconResult { metadata, cells })
}

/// Number of non-empty lines, for quick sanity checks on text outputs.
pub fn count_lines(path: &Path) -> Result<usize> {
    let f = BufReader::new(fs::File::open(path)?);
    let mut n = 0;
    for line in f.lines() {
        if !line?.trim().is_empty() {
            n += 1;
        }
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{HColumnCache, Method, ReconConfig, Reconstructor};
    use crate::mobius::Ball;
    use crate::spectral::{frechet_ball, TruncationPlan};

    fn sample() -> SpectralMatrix {
        frechet_ball(&Ball::from_xy(0.3, -0.2, 0.25).unwrap(), 3).unwrap()
    }

    #[test]
    fn binary_layout() {
        let m = sample();
        let bytes = matrix_to_bytes(&m);
        assert_eq!(bytes.len(), 16 * 36);
        // Entry (row 0, col 1) is mode pair (−3, −2).
        let re = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
        assert_eq!(Complex64::new(re, im), m.get(-3, -2));
        assert_eq!(matrix_from_bytes(&bytes).unwrap().entries(), m.entries());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = sample();
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        assert_eq!(read_matrix_csv(buf.as_slice()).unwrap().entries(), m.entries());
    }

    #[test]
    fn malformed_inputs() {
        assert!(matrix_from_bytes(&[0u8; 15]).is_err());
        assert!(matrix_from_bytes(&[0u8; 16 * 9]).is_err());
        assert!(read_matrix_csv("1,2,3\n".as_bytes()).is_err());
        assert!(read_matrix_csv("1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn files_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample();
        for name in ["m.bin", "m.csv"] {
            let p = dir.path().join(name);
            write_matrix(&p, &m).unwrap();
            assert_eq!(read_matrix(&p).unwrap().entries(), m.entries());
        }
    }

    #[test]
    fn result_round_trip() {
        let cache = HColumnCache::in_memory();
        let config = ReconConfig {
            method: Method::Linear,
            hex_radius: 0.2,
            plan: TruncationPlan::new(4, 40).unwrap(),
            ..ReconConfig::default()
        };
        let data = &frechet_ball(&Ball::from_xy(0.1, 0.1, 0.3).unwrap(), 4).unwrap().scaled(0.5)
            + &crate::spectral::background_nd(4);
        let result = Reconstructor::new(&config, &cache).unwrap().run(&data).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("out/linear");
        write_result(&stem, &result).unwrap();
        assert_eq!(read_result(&stem).unwrap(), result);
        assert_eq!(count_lines(&stem.with_extension("csv")).unwrap(), result.cells.len() + 1);
        let header = fs::read_to_string(stem.with_extension("csv")).unwrap();
        assert!(header.starts_with("cell,x,y,smallest_eigenvalue,accepted\n"));
    }
}
