use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use eitmono_cli::{commands, Overrides, RunConfig};
use eitmono_core::HColumnCache;

/// Monotonicity-based reconstruction of conductivity inclusions in the unit disk.
#[derive(Parser)]
#[command(name = "eitmono", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate noiseless and noisy ND matrices for a phantom.
    GenData(Common),
    /// Reconstruct from stored data and write CSV, JSON and SVG results.
    Reconstruct(Common),
    /// Tabulate linear-vs-nonlinear differences per noise level.
    Compare(Common),
    /// Re-render SVGs from stored results.
    Render {
        #[command(flatten)]
        common: Common,
        /// A single result (stem or .csv/.json path) instead of all configured ones.
        #[arg(long)]
        result: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = match (&self.config, &self.overrides.phantom) {
            (Some(path), _) => RunConfig::load(path)?,
            (None, Some(phantom)) => RunConfig::new(phantom),
            (None, None) => bail!("either --config or --phantom is required"),
        };
        config.apply(&self.overrides);
        config.validate()?;
        Ok(config)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::GenData(c) => {
            let manifest = commands::gen_data(&c.resolve()?)?;
            if let Some(rel) = manifest.fem_relative_discrepancy {
                println!("fem vs exact relative discrepancy: {rel:.3e}");
            }
        }
        Command::Reconstruct(c) => {
            let cache = HColumnCache::from_env();
            for (stem, result) in commands::reconstruct(&c.resolve()?, &cache)? {
                let m = &result.metadata;
                println!(
                    "{}: {}/{} accepted, {:.3} s",
                    stem.display(),
                    m.accepted_count,
                    m.cell_count,
                    m.timings.total_seconds
                );
            }
        }
        Command::Compare(c) => {
            let config = c.resolve()?;
            commands::compare(&config)?;
            print!("{}", std::fs::read_to_string(config.out.join("compare.csv"))?);
        }
        Command::Render { common, result } => {
            for path in commands::render(&common.resolve()?, result.as_deref())? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}
