//! Flat key-value configuration. Every key doubles as a command-line flag
//! and flags win over the file.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Knobs shared by every command. Field names are the config-file keys.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Knobs {
    /// Base seed for every random choice
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Walks per harmonic-measure estimate
    #[arg(long, global = true)]
    pub walks: Option<u64>,
    /// Absorption shell width of the walk-on-spheres estimator
    #[arg(long, global = true)]
    pub epsilon_shell: Option<f64>,
    /// Truncation of generated sequences
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
    /// Boundary nodes of fitted majorants
    #[arg(long, global = true)]
    pub node_count: Option<usize>,
    /// Largest admissible majorant mass
    #[arg(long, global = true)]
    pub mass_cap: Option<f64>,
    /// Rings of the sample grid (rings at 1 - 2^-j)
    #[arg(long, global = true)]
    pub grid_j: Option<usize>,
    /// Base angular count of the sample grid (2^j * q points on ring j)
    #[arg(long, global = true)]
    pub grid_q: Option<usize>,
    /// Output path for the JSON report (stdout if absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Sequence family for `generate`
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// Sequence file
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// CSV output path for `counterexample`
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// Hole center as re,im
    #[arg(long, global = true, value_parser = parse_pair)]
    pub center: Option<[f64; 2]>,
    /// Pseudohyperbolic hole radius
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// Evaluation point as re,im
    #[arg(long, global = true, value_parser = parse_pair)]
    pub at: Option<[f64; 2]>,
    /// Multiple N of the fitted H used for the holes
    #[arg(long, global = true)]
    pub h_multiplier: Option<f64>,
    /// First generator's zero sequence
    #[arg(long, global = true)]
    pub first: Option<PathBuf>,
    /// Second generator's zero sequence
    #[arg(long, global = true)]
    pub second: Option<PathBuf>,
    /// Threshold of `split-product`
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Factors of `split-product`, comma separated
    #[arg(long, global = true, value_delimiter = ',', num_args = 1..)]
    pub factors: Option<Vec<f64>>,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected re,im but got {s:?}"));
    }
    let re = parts[0].parse::<f64>().map_err(|e| e.to_string())?;
    let im = parts[1].parse::<f64>().map_err(|e| e.to_string())?;
    Ok([re, im])
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl Knobs {
    /// Reads a config file; unknown keys are rejected.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// `self` with every key set in `flags` replaced.
    pub fn overlay(mut self, flags: &Knobs) -> Self {
        overlay!(self, flags; seed, walks, epsilon_shell, n_max, node_count, mass_cap,
            grid_j, grid_q, out, family, input, csv, center, radius, at,
            h_multiplier, first, second, eta, factors);
        self
    }
}

/// Resolved numeric knobs, echoed in every report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub seed: u64,
    pub walks: u64,
    pub epsilon_shell: f64,
    pub node_count: usize,
    pub mass_cap: f64,
    pub grid_j: usize,
    pub grid_q: usize,
}

impl Resolved {
    pub fn from_knobs(k: &Knobs) -> Result<Self, CliError> {
        let r = Self {
            seed: k.seed.unwrap_or(0),
            walks: k.walks.unwrap_or(10_000),
            epsilon_shell: k.epsilon_shell.unwrap_or(disklab::harmonic_measure::DEFAULT_EPSILON_SHELL),
            node_count: k.node_count.unwrap_or(1024),
            mass_cap: k.mass_cap.unwrap_or(1e6),
            grid_j: k.grid_j.unwrap_or(10),
            grid_q: k.grid_q.unwrap_or(8),
        };
        check(r.walks >= 1 && r.walks <= 100_000_000, "walks must lie in 1..=1e8")?;
        check(
            r.epsilon_shell > 0.0 && r.epsilon_shell < 0.5,
            "epsilon_shell must lie in (0, 0.5)",
        )?;
        check((8..=5000).contains(&r.node_count), "node_count must lie in 8..=5000")?;
        check(r.mass_cap > 0.0 && r.mass_cap.is_finite(), "mass_cap must be positive")?;
        check((2..=16).contains(&r.grid_j), "grid_j must lie in 2..=16")?;
        check((1..=64).contains(&r.grid_q), "grid_q must lie in 1..=64")?;
        Ok(r)
    }
}

pub fn check(ok: bool, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Input(msg.into()))
    }
}
