//! Run configuration: command-line flags layered over an optional TOML file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Energy,
    Gradient,
    Validate,
    FdSweep,
}

/// Command-line flags. Every setting is optional here so that a config file
/// can supply it; flags win over the file.
#[derive(Debug, Parser)]
#[command(name = "mcvqe", version, about = "MC-VQE energies and response-relaxed matrix-element gradients")]
pub struct Cli {
    /// FCIDUMP file, or `builtin:FIX-A|FIX-B|FIX-C`.
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Number of MC-VQE states.
    #[arg(long)]
    pub states: Option<usize>,
    /// Number of fabric layers.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Comma-separated state-averaging weights (normalized internally).
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// Seed for parameter jitter and random validation points.
    #[arg(long)]
    pub seed: Option<u64>,
    /// SA-VQE convergence threshold on the gradient infinity norm.
    #[arg(long)]
    pub gtol: Option<f64>,
    /// Response-equation residual threshold.
    #[arg(long = "resp-tol")]
    pub resp_tol: Option<f64>,
    /// Hessian strategy: exact, matvec or matvec-fd.
    #[arg(long)]
    pub hessian: Option<String>,
    /// Finite-difference stencil points for matvec-fd.
    #[arg(long)]
    pub nfd: Option<usize>,
    /// Finite-difference stencil step for matvec-fd, in radians.
    #[arg(long)]
    pub dfd: Option<f64>,
    /// Output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file with any of the settings above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    input: Option<String>,
    mode: Option<Mode>,
    states: Option<usize>,
    layers: Option<usize>,
    weights: Option<Vec<f64>>,
    seed: Option<u64>,
    gtol: Option<f64>,
    resp_tol: Option<f64>,
    hessian: Option<String>,
    nfd: Option<usize>,
    dfd: Option<f64>,
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub input: String,
    pub mode: Mode,
    /// `None` defers to the built-in fixture's value, or 1.
    pub states: Option<usize>,
    pub layers: Option<usize>,
    pub weights: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub gtol: f64,
    pub resp_tol: f64,
    pub hessian: String,
    /// `None` means the full sweep grid in fd-sweep mode and 4 elsewhere.
    pub nfd: Option<usize>,
    pub dfd: Option<f64>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

impl RunConfig {
    pub fn resolve(cli: Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => load_file(p)?,
            None => FileConfig::default(),
        };
        let mode = cli.mode.or(file.mode).unwrap_or(Mode::Energy);
        let Some(input) = cli.input.or(file.input) else {
            bail!("--input is required");
        };
        let cfg = Self {
            input,
            mode,
            states: cli.states.or(file.states),
            layers: cli.layers.or(file.layers),
            weights: cli.weights.or(file.weights),
            seed: cli.seed.or(file.seed),
            gtol: cli.gtol.or(file.gtol).unwrap_or(1e-8),
            resp_tol: cli.resp_tol.or(file.resp_tol).unwrap_or(if mode == Mode::FdSweep { 1e-12 } else { 1e-9 }),
            hessian: cli.hessian.or(file.hessian).unwrap_or_else(|| "matvec".into()),
            nfd: cli.nfd.or(file.nfd),
            dfd: cli.dfd.or(file.dfd),
            out: cli.out.or(file.out),
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("states", self.states), ("layers", self.layers)] {
            if v == Some(0) {
                bail!("--{name} must be positive");
            }
        }
        for (name, v) in [("gtol", Some(self.gtol)), ("resp-tol", Some(self.resp_tol)), ("dfd", self.dfd)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    bail!("--{name} must be positive (got {x})");
                }
            }
        }
        if matches!(self.mode, Mode::Validate | Mode::FdSweep) && self.seed.is_none() {
            bail!("--seed is required in {} mode", self.mode_name());
        }
        mcvqe_core::response::strategy(&self.hessian)?;
        Ok(())
    }

    pub fn mode_name(&self) -> &'static str {
        match self.mode {
            Mode::Energy => "energy",
            Mode::Gradient => "gradient",
            Mode::Validate => "validate",
            Mode::FdSweep => "fd-sweep",
        }
    }
}
