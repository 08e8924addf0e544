//! Run configuration: a JSON file with command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use eitmono_core::{Method, ReconConfig, TruncationPlan};
use eitmono_fem::DEFAULT_H;
use serde::{Deserialize, Serialize};

/// Where the noiseless datum comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    /// Exact assembly for a single ball or the empty phantom, FEM otherwise.
    #[default]
    Auto,
    Exact,
    Fem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub phantom: PathBuf,
    /// Label used in comparison tables; defaults to the phantom file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default = "default_assembly_order")]
    pub assembly_order: usize,
    #[serde(default = "default_hex_radius")]
    pub hex_radius: f64,
    #[serde(default = "default_beta_lower")]
    pub beta_lower: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    /// Clamp `α` at zero; `false` uses `α = −μ·λ_min(R1 − Rδ)` as is.
    #[serde(default = "default_clamp_alpha")]
    pub clamp_alpha: bool,
    #[serde(default = "default_precision_bits")]
    pub precision_bits: u32,
    #[serde(default)]
    pub source: DataSource,
    #[serde(default = "default_mesh_size")]
    pub mesh_size: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_deltas() -> Vec<f64> {
    vec![0.0, 1e-5, 1e-4, 1e-3, 1e-2]
}
fn default_seed() -> u64 {
    1
}
fn default_order() -> usize {
    16
}
fn default_assembly_order() -> usize {
    200
}
fn default_hex_radius() -> f64 {
    0.025
}
fn default_beta_lower() -> f64 {
    4.0
}
fn default_mu() -> f64 {
    1.0
}
fn default_clamp_alpha() -> bool {
    true
}
fn default_precision_bits() -> u32 {
    eitmono_core::spectral::DEFAULT_PRECISION_BITS
}
fn default_mesh_size() -> f64 {
    DEFAULT_H
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line values that replace the file's.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// Phantom JSON file.
    #[arg(long)]
    pub phantom: Option<PathBuf>,
    /// Method to run; repeat for both.
    #[arg(long = "method")]
    pub methods: Vec<Method>,
    /// Noise levels, comma separated or repeated.
    #[arg(long = "delta", value_delimiter = ',')]
    pub deltas: Vec<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Let `α` go negative when `R1 − Rδ` is positive definite.
    #[arg(long)]
    pub signed_alpha: bool,
    #[arg(long)]
    pub hex_radius: Option<f64>,
    /// Data truncation order N.
    #[arg(long)]
    pub order: Option<usize>,
    /// Internal assembly order Ñ.
    #[arg(long)]
    pub assembly_order: Option<usize>,
    #[arg(long)]
    pub source: Option<DataSource>,
    #[arg(long)]
    pub mesh_size: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(phantom: impl Into<PathBuf>) -> Self {
        Self {
            phantom: phantom.into(),
            label: None,
            methods: default_methods(),
            deltas: default_deltas(),
            seed: default_seed(),
            order: default_order(),
            assembly_order: default_assembly_order(),
            hex_radius: default_hex_radius(),
            beta_lower: default_beta_lower(),
            mu: default_mu(),
            clamp_alpha: default_clamp_alpha(),
            precision_bits: default_precision_bits(),
            source: DataSource::Auto,
            mesh_size: default_mesh_size(),
            out: default_out(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).context("parsing run configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Reads a configuration; a relative phantom path is taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = Self::from_json(&text)?;
        if config.phantom.is_relative() {
            if let Some(dir) = path.parent() {
                config.phantom = dir.join(&config.phantom);
            }
        }
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = &o.phantom {
            self.phantom = p.clone();
        }
        if !o.methods.is_empty() {
            self.methods = o.methods.clone();
        }
        if !o.deltas.is_empty() {
            self.deltas = o.deltas.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.mu {
            self.mu = v;
        }
        if o.signed_alpha {
            self.clamp_alpha = false;
        }
        if let Some(v) = o.hex_radius {
            self.hex_radius = v;
        }
        if let Some(v) = o.order {
            self.order = v;
        }
        if let Some(v) = o.assembly_order {
            self.assembly_order = v;
        }
        if let Some(v) = o.source {
            self.source = v;
        }
        if let Some(v) = o.mesh_size {
            self.mesh_size = v;
        }
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
    }

    pub fn plan(&self) -> Result<TruncationPlan> {
        let mut plan = TruncationPlan::new(self.order, self.assembly_order)?;
        plan.precision_bits = self.precision_bits;
        plan.validate()?;
        Ok(plan)
    }

    pub fn recon_config(&self, method: Method) -> Result<ReconConfig> {
        let config = ReconConfig {
            method,
            beta_lower: self.beta_lower,
            mu: self.mu,
            plan: self.plan()?,
            hex_radius: self.hex_radius,
            noise: None,
            clamp_alpha: self.clamp_alpha,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            bail!("no reconstruction method selected");
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d >= 0.0 && d.is_finite())) {
            bail!("noise level {d} must be finite and non-negative");
        }
        if !(self.mesh_size > 0.0 && self.mesh_size < 0.5) {
            bail!("mesh size {} must lie in (0, 0.5)", self.mesh_size);
        }
        for method in &self.methods {
            self.recon_config(*method)?;
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            self.phantom
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "phantom".into())
        })
    }

    pub fn data_dir(&self) -> PathBuf {
        self.out.join("data")
    }

    pub fn results_dir(&self) -> PathBuf {
        self.out.join("results")
    }

    /// Seed of the `i`-th noise level.
    pub fn noise_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }
}
