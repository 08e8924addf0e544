//! Regularized linear and non-linear monotonicity reconstructions.
//!
//! A tiling cell with circumscribed ball `B` is accepted when
//!
//! - non-linear: `R(1 + β·χ_B) + α·I − R^δ ⪰ 0`, with `β = β^L`;
//! - linear: `R(1) + β·R′(1)χ_B + α·I − R^δ ⪰ 0`, with `β = β^L/(1 + β^L)`;
//!
//! where `α = −μ·λ_min(R(1) − R^δ)`, clamped at zero. Both tests are written
//! as `P + X_B ⪰ 0` with `P = R(1) + α·I − R^δ` shared by all cells and a
//! block-diagonal, cell-specific `X_B`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use log::{debug, info, warn};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mobius::{concentric_radius, Ball, MobiusParams};
use crate::noise::NoiseSpec;
use crate::spectral::{
    background_nd, ball_perturbation_block, frechet_ball, frechet_plus_block, h_rho_window, nd_ball,
    smallest_eigenvalue, SpectralMatrix, TruncationPlan,
};
use crate::tiling::{hex_tiling, HexTiling};
use crate::{Error, Result};

/// Environment variable overriding the on-disk cache location.
pub const CACHE_DIR_ENV: &str = "EITMONO_CACHE_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Linear,
    Nonlinear,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Nonlinear, Method::Linear];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Linear => "linear",
            Method::Nonlinear => "nonlinear",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "lin" => Ok(Method::Linear),
            "nonlinear" | "non-linear" | "nonlin" => Ok(Method::Nonlinear),
            other => Err(Error::Format(format!("unknown method '{other}'"))),
        }
    }
}

/// `(β^nonlin, β^lin) = (β^L, β^L/(1 + β^L))`.
pub fn beta_values(beta_lower: f64) -> Result<(f64, f64)> {
    if !(beta_lower > 0.0) || !beta_lower.is_finite() {
        return Err(Error::InvalidBetaLower(beta_lower));
    }
    Ok((beta_lower, beta_lower / (1.0 + beta_lower)))
}

fn check_same_order(a: &SpectralMatrix, b: &SpectralMatrix) -> Result<()> {
    if a.order() == b.order() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a.order(), b.order()))
    }
}

/// `α = max(−μ·λ_min(R1 − Rδ), 0)`.
pub fn reg_alpha(r1: &SpectralMatrix, rd: &SpectralMatrix, mu: f64) -> Result<f64> {
    Ok(reg_alpha_signed(r1, rd, mu)?.max(0.0))
}

/// `α = −μ·λ_min(R1 − Rδ)` without the clamp. Negative when the truncated
/// noiseless perturbation is positive definite, which removes the margin
/// `λ_min(R1 − R)` the truncation leaves for cells outside the inclusions.
pub fn reg_alpha_signed(r1: &SpectralMatrix, rd: &SpectralMatrix, mu: f64) -> Result<f64> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidMu(mu));
    }
    check_same_order(r1, rd)?;
    // `+ 0.0` turns −0 into 0.
    Ok(-mu * (r1 - rd).min_eigenvalue() + 0.0)
}

/// `λ_min(nd_ball(B, β) + α·I − Rδ)`.
pub fn test_cell_nonlinear(ball: &Ball, beta: f64, rd: &SpectralMatrix, alpha: f64, plan: &TruncationPlan) -> Result<f64> {
    if rd.order() != plan.data_order {
        return Err(Error::DimensionMismatch(plan.data_order, rd.order()));
    }
    let a = nd_ball(ball, beta, plan)?.matrix;
    Ok((&a - rd).shifted(alpha).min_eigenvalue())
}

/// `λ_min(R1 + β·A′_B + α·I − Rδ)`.
pub fn test_cell_linear(
    ball: &Ball,
    beta: f64,
    r1: &SpectralMatrix,
    rd: &SpectralMatrix,
    alpha: f64,
    order: usize,
) -> Result<f64> {
    check_same_order(r1, rd)?;
    if r1.order() != order {
        return Err(Error::DimensionMismatch(order, r1.order()));
    }
    let derivative = frechet_ball(ball, order)?;
    Ok((&(r1 - rd) + &derivative.scaled(beta)).shifted(alpha).min_eigenvalue())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconConfig {
    pub method: Method,
    pub beta_lower: f64,
    pub mu: f64,
    pub plan: TruncationPlan,
    pub hex_radius: f64,
    /// Noise realization of the datum, recorded in the result metadata.
    pub noise: Option<NoiseSpec>,
    /// Clamp `α` at zero from below; see [`reg_alpha_signed`] for the alternative.
    pub clamp_alpha: bool,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            method: Method::Nonlinear,
            beta_lower: 4.0,
            mu: 1.0,
            plan: TruncationPlan::default(),
            hex_radius: 0.025,
            noise: None,
            clamp_alpha: true,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        beta_values(self.beta_lower)?;
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidMu(self.mu));
        }
        if !(self.hex_radius > 0.0 && self.hex_radius < 1.0) {
            return Err(Error::InvalidHexRadius(self.hex_radius));
        }
        self.plan.validate()
    }

    /// The contrast used by the configured method's test.
    pub fn beta(&self) -> Result<f64> {
        let (nonlin, lin) = beta_values(self.beta_lower)?;
        Ok(match self.method {
            Method::Nonlinear => nonlin,
            Method::Linear => lin,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub smallest_eigenvalue: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub setup_seconds: f64,
    pub alpha_seconds: f64,
    pub test_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconMetadata {
    pub method: Method,
    pub beta: f64,
    pub beta_lower: f64,
    pub mu: f64,
    pub alpha: f64,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub hex_radius: f64,
    pub data_order: usize,
    pub assembly_order: usize,
    pub precision_bits: u32,
    pub cell_count: usize,
    pub accepted_count: usize,
    pub timings: Timings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconResult {
    pub metadata: ReconMetadata,
    pub cells: Vec<CellOutcome>,
}

impl ReconResult {
    pub fn accepted(&self) -> Vec<bool> {
        self.cells.iter().map(|c| c.accepted).collect()
    }

    pub fn accepted_indices(&self) -> Vec<usize> {
        self.cells.iter().filter(|c| c.accepted).map(|c| c.index).collect()
    }

    pub fn accepted_count(&self) -> usize {
        self.cells.iter().filter(|c| c.accepted).count()
    }

    pub fn smallest_eigenvalues(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.smallest_eigenvalue).collect()
    }

    /// Same hexagon radius and cell centers.
    pub fn same_tiling(&self, other: &ReconResult) -> bool {
        self.metadata.hex_radius == other.metadata.hex_radius
            && self.cells.len() == other.cells.len()
            && self
                .cells
                .iter()
                .zip(&other.cells)
                .all(|(a, b)| a.index == b.index && a.x == b.x && a.y == b.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct CacheKey {
    data_order: usize,
    assembly_order: usize,
    precision_bits: u32,
}

type ColumnMap = HashMap<u64, Arc<DMatrix<f64>>>;

/// Cache of `Ñ × N` windows of `H_ρ` columns keyed by the bits of `ρ`, kept in
/// memory and optionally mirrored to one file per `(N, Ñ, precision)`.
pub struct HColumnCache {
    dir: Option<PathBuf>,
    maps: Mutex<HashMap<CacheKey, ColumnMap>>,
    loaded: Mutex<HashSet<CacheKey>>,
}

const CACHE_MAGIC: &[u8; 8] = b"EITMHC01";

impl HColumnCache {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            maps: Mutex::new(HashMap::new()),
            loaded: Mutex::new(HashSet::new()),
        }
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: Some(dir.into()),
            ..Self::in_memory()
        }
    }

    /// Directory from `EITMONO_CACHE_DIR`, else `<tmp>/eitmono-cache`.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(CACHE_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("eitmono-cache"));
        Self::with_dir(dir)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn file_for(&self, key: CacheKey) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| {
            d.join(format!(
                "hcols_N{}_Nt{}_p{}.bin",
                key.data_order, key.assembly_order, key.precision_bits
            ))
        })
    }

    fn ensure_loaded(&self, key: CacheKey) {
        let mut loaded = self.loaded.lock().expect("cache lock poisoned");
        if !loaded.insert(key) {
            return;
        }
        let Some(path) = self.file_for(key) else { return };
        if !path.exists() {
            return;
        }
        match read_cache_file(&path, key) {
            Ok(entries) => {
                debug!("loaded {} cached H column windows from {}", entries.len(), path.display());
                let mut maps = self.maps.lock().expect("cache lock poisoned");
                let map = maps.entry(key).or_default();
                for (bits, m) in entries {
                    map.entry(bits).or_insert_with(|| Arc::new(m));
                }
            }
            Err(e) => warn!("ignoring unreadable cache file {}: {e}", path.display()),
        }
    }

    /// Column windows for each `ρ`, computing the missing ones.
    pub fn columns(&self, rhos: &[f64], plan: &TruncationPlan) -> Result<Vec<Arc<DMatrix<f64>>>> {
        let key = CacheKey {
            data_order: plan.data_order,
            assembly_order: plan.assembly_order,
            precision_bits: plan.precision_bits,
        };
        self.ensure_loaded(key);
        let missing: Vec<f64> = {
            let maps = self.maps.lock().expect("cache lock poisoned");
            let map = maps.get(&key);
            let mut seen = HashSet::new();
            rhos.iter()
                .copied()
                .filter(|rho| map.is_none_or(|m| !m.contains_key(&rho.to_bits())) && seen.insert(rho.to_bits()))
                .collect()
        };
        if !missing.is_empty() {
            let start = Instant::now();
            let computed: Vec<(u64, DMatrix<f64>)> = missing
                .par_iter()
                .map(|&rho| {
                    h_rho_window(rho, plan.assembly_order, plan.data_order, plan.precision_bits)
                        .map(|m| (rho.to_bits(), m))
                })
                .collect::<Result<_>>()?;
            info!(
                "evaluated {} H column windows (N = {}, Ñ = {}) in {:.2} s",
                computed.len(),
                plan.data_order,
                plan.assembly_order,
                start.elapsed().as_secs_f64()
            );
            let mut maps = self.maps.lock().expect("cache lock poisoned");
            let map = maps.entry(key).or_default();
            for (bits, m) in computed {
                map.insert(bits, Arc::new(m));
            }
            if let Some(path) = self.file_for(key) {
                if let Err(e) = write_cache_file(&path, key, map) {
                    warn!("could not write cache file {}: {e}", path.display());
                }
            }
        }
        let maps = self.maps.lock().expect("cache lock poisoned");
        let map = &maps[&key];
        Ok(rhos.iter().map(|rho| Arc::clone(&map[&rho.to_bits()])).collect())
    }

    /// Number of cached windows across all keys.
    pub fn len(&self) -> usize {
        self.maps.lock().expect("cache lock poisoned").values().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn read_cache_file(path: &Path, key: CacheKey) -> std::io::Result<Vec<(u64, DMatrix<f64>)>> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |msg: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, msg.to_string());
    if bytes.len() < 32 || &bytes[..8] != CACHE_MAGIC {
        return Err(bad("bad header"));
    }
    let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (n, nt, bits, count) = (word(8) as usize, word(16) as usize, word(24) as u32, 0);
    let _ = count;
    if n != key.data_order || nt != key.assembly_order || bits != key.precision_bits {
        return Err(bad("header does not match the requested plan"));
    }
    let stride = 8 + 8 * n * nt;
    let body = &bytes[32..];
    if body.len() % stride != 0 {
        return Err(bad("truncated body"));
    }
    Ok(body
        .chunks_exact(stride)
        .map(|chunk| {
            let rho_bits = u64::from_le_bytes(chunk[..8].try_into().expect("8 bytes"));
            let values: Vec<f64> = chunk[8..]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect();
            (rho_bits, DMatrix::from_vec(nt, n, values))
        })
        .collect())
}

fn write_cache_file(path: &Path, key: CacheKey, map: &ColumnMap) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut keys: Vec<u64> = map.keys().copied().collect();
    keys.sort_unstable();
    let mut bytes = Vec::with_capacity(32 + keys.len() * (8 + 8 * key.data_order * key.assembly_order));
    bytes.extend_from_slice(CACHE_MAGIC);
    bytes.extend_from_slice(&(key.data_order as u64).to_le_bytes());
    bytes.extend_from_slice(&(key.assembly_order as u64).to_le_bytes());
    bytes.extend_from_slice(&(key.precision_bits as u64).to_le_bytes());
    for k in keys {
        bytes.extend_from_slice(&k.to_le_bytes());
        for v in map[&k].iter() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::File::create(&tmp)?.write_all(&bytes)?;
    fs::rename(tmp, path)
}

/// Möbius parameters of a tiling cell with `|C|` taken from the lattice shell,
/// so that cells related by a symmetry of the lattice share `ρ` exactly.
fn cell_params(tiling: &HexTiling, index: usize) -> Result<(f64, MobiusParams)> {
    let cell = &tiling.cells[index];
    let big_r = tiling.hex_radius;
    let c = tiling.center_distance(cell);
    let r = concentric_radius(c, big_r)?;
    let rho = c / (1.0 - big_r * r);
    let zeta = cell.center[1].atan2(cell.center[0]);
    Ok((
        rho,
        MobiusParams {
            a: Complex64::from_polar(rho, zeta),
            r,
        },
    ))
}

/// Tiling and per-cell test blocks for one configuration, reusable across data.
pub struct Reconstructor {
    config: ReconConfig,
    beta: f64,
    tiling: HexTiling,
    /// Positive block of `X_B` (`A_B − R(1)` or `β·A′_B`) per cell.
    blocks: Vec<DMatrix<Complex64>>,
    setup_seconds: f64,
}

impl Reconstructor {
    pub fn new(config: &ReconConfig, cache: &HColumnCache) -> Result<Self> {
        config.validate()?;
        let start = Instant::now();
        let beta = config.beta()?;
        let tiling = hex_tiling(config.hex_radius)?;
        let n = config.plan.data_order;
        let blocks = match config.method {
            Method::Nonlinear => {
                let params: Vec<(f64, MobiusParams)> =
                    (0..tiling.len()).map(|i| cell_params(&tiling, i)).collect::<Result<_>>()?;
                let rhos: Vec<f64> = params.iter().map(|p| p.0).collect();
                let columns = cache.columns(&rhos, &config.plan)?;
                params
                    .par_iter()
                    .zip(columns.par_iter())
                    .map(|((_, p), cols)| ball_perturbation_block(p, beta, cols))
                    .collect::<Result<Vec<_>>>()?
            }
            Method::Linear => tiling
                .cells
                .par_iter()
                .map(|cell| frechet_plus_block(&tiling.ball(cell), n).map(|b| b * Complex64::new(beta, 0.0)))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(Self {
            config: config.clone(),
            beta,
            tiling,
            blocks,
            setup_seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn config(&self) -> &ReconConfig {
        &self.config
    }

    pub fn tiling(&self) -> &HexTiling {
        &self.tiling
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn check_data(&self, data: &SpectralMatrix) -> Result<()> {
        if data.order() != self.config.plan.data_order {
            return Err(Error::DimensionMismatch(self.config.plan.data_order, data.order()));
        }
        Ok(())
    }

    /// `α` for this datum.
    pub fn alpha(&self, data: &SpectralMatrix) -> Result<f64> {
        self.check_data(data)?;
        let r1 = background_nd(data.order());
        if self.config.clamp_alpha {
            reg_alpha(&r1, data, self.config.mu)
        } else {
            reg_alpha_signed(&r1, data, self.config.mu)
        }
    }

    fn shared_part(&self, data: &SpectralMatrix, alpha: f64) -> DMatrix<Complex64> {
        // The difference is formed first: α is far below the resolution of diag(1/|n|).
        (&background_nd(data.order()) - data).shifted(alpha).into_entries()
    }

    fn cell_eigenvalue(&self, shared: &DMatrix<Complex64>, index: usize) -> f64 {
        let n = self.config.plan.data_order;
        let block = &self.blocks[index];
        let mut m = shared.clone();
        for j in 0..n {
            for i in 0..n {
                let v = block[(i, j)];
                m[(n + i, n + j)] += v;
                m[(n - 1 - i, n - 1 - j)] += v.conj();
            }
        }
        smallest_eigenvalue(&m)
    }

    /// Smallest test eigenvalue of every cell at a given `α`.
    pub fn smallest_eigenvalues(&self, data: &SpectralMatrix, alpha: f64) -> Result<Vec<f64>> {
        self.check_data(data)?;
        let shared = self.shared_part(data, alpha);
        Ok((0..self.tiling.len())
            .into_par_iter()
            .map(|i| self.cell_eigenvalue(&shared, i))
            .collect())
    }

    /// Serial evaluation, for checking that cell order does not matter.
    pub fn smallest_eigenvalues_serial(&self, data: &SpectralMatrix, alpha: f64) -> Result<Vec<f64>> {
        self.check_data(data)?;
        let shared = self.shared_part(data, alpha);
        Ok((0..self.tiling.len()).map(|i| self.cell_eigenvalue(&shared, i)).collect())
    }

    pub fn run(&self, data: &SpectralMatrix) -> Result<ReconResult> {
        let start = Instant::now();
        let alpha = self.alpha(data)?;
        let alpha_seconds = start.elapsed().as_secs_f64();
        let mut result = self.run_with_alpha(data, alpha)?;
        result.metadata.timings.alpha_seconds = alpha_seconds;
        result.metadata.timings.total_seconds += alpha_seconds;
        Ok(result)
    }

    pub fn run_with_alpha(&self, data: &SpectralMatrix, alpha: f64) -> Result<ReconResult> {
        let start = Instant::now();
        let values = self.smallest_eigenvalues(data, alpha)?;
        let test_seconds = start.elapsed().as_secs_f64();
        let cells: Vec<CellOutcome> = self
            .tiling
            .cells
            .iter()
            .zip(values)
            .map(|(cell, v)| CellOutcome {
                index: cell.index,
                x: cell.center[0],
                y: cell.center[1],
                smallest_eigenvalue: v,
                accepted: v >= 0.0,
            })
            .collect();
        let accepted_count = cells.iter().filter(|c| c.accepted).count();
        let c = &self.config;
        Ok(ReconResult {
            metadata: ReconMetadata {
                method: c.method,
                beta: self.beta,
                beta_lower: c.beta_lower,
                mu: c.mu,
                alpha,
                delta: c.noise.map(|s| s.delta),
                seed: c.noise.map(|s| s.seed),
                hex_radius: c.hex_radius,
                data_order: c.plan.data_order,
                assembly_order: c.plan.assembly_order,
                precision_bits: c.plan.precision_bits,
                cell_count: cells.len(),
                accepted_count,
                timings: Timings {
                    setup_seconds: self.setup_seconds,
                    alpha_seconds: 0.0,
                    test_seconds,
                    total_seconds: self.setup_seconds + test_seconds,
                },
            },
            cells,
        })
    }
}

/// Builds the tiling, computes `α` once and tests every cell.
pub fn reconstruct(config: &ReconConfig, data: &SpectralMatrix) -> Result<ReconResult> {
    let cache = HColumnCache::from_env();
    Reconstructor::new(config, &cache)?.run(data)
}
