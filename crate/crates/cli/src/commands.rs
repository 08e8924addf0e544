//! The `gen-data`, `reconstruct`, `compare` and `render` subcommands.
//!
//! Layout of the output directory:
//!
//! ```text
//! data/manifest.json        sources, noise levels, seeds, achieved norms
//! data/clean.bin            noiseless datum used for reconstruction
//! data/exact.bin, fem.bin   individual sources, when available
//! data/delta_<δ>.bin        noisy data
//! results/<method>_delta_<δ>.{csv,json,svg}
//! compare.csv, compare.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use eitmono_core::compare::{write_table, DiffReport, TableRow};
use eitmono_core::io::{read_matrix_bin, read_result, write_matrix_bin, write_result};
use eitmono_core::{
    background_nd, diff, make_noise, nd_ball, operator_norm, svg, HColumnCache, Method, NoiseSpec, Phantom,
    ReconResult, Reconstructor, SpectralMatrix,
};
use eitmono_fem::simulate_corrected;
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::config::{DataSource, RunConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Exact background `diag(1/|n|)`.
    Background,
    /// Exact ball assembly.
    Exact,
    /// Background-corrected finite elements.
    Fem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisyDatum {
    pub delta: f64,
    pub seed: u64,
    pub file: String,
    /// `‖R^δ − R‖` of the stored matrix.
    pub achieved_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataManifest {
    pub label: String,
    pub source: Source,
    pub order: usize,
    /// Base seed; the `i`-th generated noise level used `seed + i`.
    pub seed: u64,
    pub clean: String,
    pub exact: Option<String>,
    pub fem: Option<String>,
    /// `‖R_fem − R_exact‖ / ‖R_exact‖` when both were computed.
    pub fem_relative_discrepancy: Option<f64>,
    pub fem_nodes: Option<usize>,
    pub noisy: Vec<NoisyDatum>,
}

impl DataManifest {
    pub fn path(config: &RunConfig) -> PathBuf {
        config.data_dir().join("manifest.json")
    }

    pub fn load(config: &RunConfig) -> Result<Self> {
        let path = Self::path(config);
        let text = fs::read_to_string(&path)
            .with_context(|| format!("missing data manifest {}; run gen-data first", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// The stored datum for noise level `delta`, generated from base seed `seed`.
    pub fn noisy(&self, delta: f64, seed: u64) -> Result<&NoisyDatum> {
        if self.seed != seed {
            bail!("data were generated with seed {}, configuration has {seed}", self.seed);
        }
        self.noisy
            .iter()
            .find(|d| d.delta == delta)
            .ok_or_else(|| anyhow!("no data for delta = {delta:e}; run gen-data with this noise level"))
    }
}

/// File-name form of a noise level, without dots: `2.5e-3` becomes `2p5e-3`.
pub fn delta_tag(delta: f64) -> String {
    format!("{delta:e}").replace('.', "p")
}

pub fn result_stem(config: &RunConfig, method: Method, delta: f64) -> PathBuf {
    config
        .results_dir()
        .join(format!("{}_delta_{}", method.as_str(), delta_tag(delta)))
}

fn load_phantom(config: &RunConfig) -> Result<Phantom> {
    Phantom::load(&config.phantom).with_context(|| format!("loading phantom {}", config.phantom.display()))
}

/// Writes the noiseless datum and one noisy datum per noise level.
pub fn gen_data(config: &RunConfig) -> Result<DataManifest> {
    config.validate()?;
    let phantom = load_phantom(config)?;
    let plan = config.plan()?;
    let n = config.order;
    let dir = config.data_dir();
    fs::create_dir_all(&dir)?;

    let exact = if phantom.is_empty() {
        Some((Source::Background, background_nd(n)))
    } else if let Some((ball, contrast)) = phantom.as_single_ball() {
        Some((Source::Exact, nd_ball(&ball, contrast, &plan)?.matrix))
    } else {
        None
    };
    let want_fem = match config.source {
        DataSource::Exact => false,
        DataSource::Fem => true,
        DataSource::Auto => exact.is_none() || matches!(exact, Some((Source::Exact, _))),
    };
    if config.source == DataSource::Exact && exact.is_none() {
        bail!("exact data needs a single-ball or empty phantom");
    }

    let mut manifest = DataManifest {
        label: config.label(),
        source: Source::Fem,
        order: n,
        seed: config.seed,
        clean: "clean.bin".into(),
        exact: None,
        fem: None,
        fem_relative_discrepancy: None,
        fem_nodes: None,
        noisy: Vec::new(),
    };

    let fem = if want_fem {
        let fem = simulate_corrected(&phantom, config.mesh_size, n)?;
        info!(
            "FEM data: {} nodes, raw Hermitian defect {:.1e}, centrohermitian defect {:.1e}",
            fem.nodes, fem.hermitian_defect, fem.centrohermitian_defect
        );
        write_matrix_bin(&dir.join("fem.bin"), &fem.matrix)?;
        manifest.fem = Some("fem.bin".into());
        manifest.fem_nodes = Some(fem.nodes);
        Some(fem.matrix)
    } else {
        None
    };
    if let Some((source, m)) = &exact {
        write_matrix_bin(&dir.join("exact.bin"), m)?;
        manifest.exact = Some("exact.bin".into());
        manifest.source = *source;
    }
    if let (Some((_, e)), Some(f)) = (&exact, &fem) {
        let rel = operator_norm(&(f - e))? / operator_norm(e)?;
        info!("FEM vs exact relative operator-norm discrepancy {rel:.3e}");
        manifest.fem_relative_discrepancy = Some(rel);
    }

    let clean = match (config.source, exact, fem) {
        (DataSource::Fem, _, Some(f)) => {
            manifest.source = Source::Fem;
            f
        }
        (_, Some((_, e)), _) => e,
        (_, None, Some(f)) => f,
        _ => unreachable!("some datum is always computed"),
    };
    write_matrix_bin(&dir.join(&manifest.clean), &clean)?;

    for (i, &delta) in config.deltas.iter().enumerate() {
        let spec = NoiseSpec::new(delta, config.noise_seed(i))?;
        let noisy = &clean + &make_noise(&clean, &spec)?;
        let achieved_norm = operator_norm(&(&noisy - &clean))?;
        if (achieved_norm - delta).abs() > 1e-12 {
            warn!("noise level {delta:e} stored with norm {achieved_norm:e}");
        }
        let file = format!("delta_{}.bin", delta_tag(delta));
        write_matrix_bin(&dir.join(&file), &noisy)?;
        manifest.noisy.push(NoisyDatum {
            delta,
            seed: spec.seed,
            file,
            achieved_norm,
        });
    }

    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::write(DataManifest::path(config), json)?;
    info!("wrote {} data files to {}", manifest.noisy.len() + 1, dir.display());
    Ok(manifest)
}

/// Loads the noisy datum for one noise level.
pub fn load_datum(config: &RunConfig, manifest: &DataManifest, index: usize) -> Result<(NoiseSpec, SpectralMatrix)> {
    let delta = config.deltas[index];
    let entry = manifest.noisy(delta, config.seed)?;
    let m = read_matrix_bin(&config.data_dir().join(&entry.file))?;
    if m.order() != config.order {
        bail!("stored data have order {}, configuration expects {}", m.order(), config.order);
    }
    Ok((NoiseSpec::new(delta, entry.seed)?, m))
}

fn svg_title(config: &RunConfig, result: &ReconResult) -> String {
    let m = &result.metadata;
    format!(
        "{} {} delta={} mu={} accepted {}/{}",
        config.label(),
        m.method,
        m.delta.unwrap_or(0.0),
        m.mu,
        m.accepted_count,
        m.cell_count
    )
}

fn write_svg(config: &RunConfig, stem: &Path, result: &ReconResult, phantom: &Phantom) -> Result<()> {
    let text = svg::render(result, Some(phantom), &svg_title(config, result))?;
    fs::write(stem.with_extension("svg"), text)?;
    Ok(())
}

/// Runs every configured method on every configured noise level.
pub fn reconstruct(config: &RunConfig, cache: &HColumnCache) -> Result<Vec<(PathBuf, ReconResult)>> {
    config.validate()?;
    let phantom = load_phantom(config)?;
    let manifest = DataManifest::load(config)?;
    let data = (0..config.deltas.len())
        .map(|i| load_datum(config, &manifest, i))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    for &method in &config.methods {
        let mut recon_config = config.recon_config(method)?;
        for (spec, datum) in &data {
            recon_config.noise = Some(*spec);
            let result = Reconstructor::new(&recon_config, cache)?.run(datum)?;
            let m = &result.metadata;
            info!(
                "{method} delta={}: alpha {:.3e}, {} of {} cells accepted in {:.3} s",
                delta_tag(spec.delta),
                m.alpha,
                m.accepted_count,
                m.cell_count,
                m.timings.total_seconds
            );
            let stem = result_stem(config, method, spec.delta);
            write_result(&stem, &result)?;
            write_svg(config, &stem, &result, &phantom)?;
            out.push((stem, result));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub delta: f64,
    pub report: DiffReport,
}

/// Linear-vs-nonlinear differences per noise level.
pub fn compare(config: &RunConfig) -> Result<Vec<TableRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut details = Vec::new();
    for &delta in &config.deltas {
        let load = |method| {
            let stem = result_stem(config, method, delta);
            read_result(&stem).with_context(|| format!("missing result {}; run reconstruct", stem.display()))
        };
        let nonlinear = load(Method::Nonlinear)?;
        let linear = load(Method::Linear)?;
        let report = diff(&nonlinear, &linear)?;
        rows.push(TableRow {
            example: config.label(),
            delta,
            mu: nonlinear.metadata.mu,
            e_abs: report.e_abs,
            e_rel: report.e_rel,
            total_cells: report.total_cells,
        });
        details.push(ComparisonEntry { delta, report });
    }
    fs::create_dir_all(&config.out)?;
    write_table(&rows, fs::File::create(config.out.join("compare.csv"))?)?;
    let mut json = serde_json::to_string_pretty(&details)?;
    json.push('\n');
    fs::write(config.out.join("compare.json"), json)?;
    Ok(rows)
}

/// Re-renders the SVG of one stored result, or of every configured one.
pub fn render(config: &RunConfig, result: Option<&Path>) -> Result<Vec<PathBuf>> {
    let phantom = load_phantom(config)?;
    let stems: Vec<PathBuf> = match result {
        Some(path) => {
            let known = path.extension().is_some_and(|e| e == "csv" || e == "json" || e == "svg");
            vec![if known { path.with_extension("") } else { path.to_path_buf() }]
        }
        None => config
            .methods
            .iter()
            .flat_map(|&m| config.deltas.iter().map(move |&d| result_stem(config, m, d)))
            .collect(),
    };
    for stem in &stems {
        let r = read_result(stem).with_context(|| format!("reading result {}", stem.display()))?;
        write_svg(config, stem, &r, &phantom)?;
    }
    Ok(stems.iter().map(|s| s.with_extension("svg")).collect())
}
