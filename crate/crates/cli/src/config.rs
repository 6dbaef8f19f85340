//! JSON run configuration: block-structured file, flag overrides, and the
//! parameter echo emitted into every output.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use csl_core::io::fmt_f64;
use csl_core::params::{gamma_from_lambda, lambda_from_gamma};
use csl_core::{CslParams, Grid1D, Hamiltonian, Observable, Wavefunction};

/// Configuration problem; always maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error at {}: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

/// Raw file schema. Every block is optional at parse time; each subcommand
/// validates the blocks it needs.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub grid: Option<GridBlock>,
    pub params: Option<ParamsBlock>,
    pub run: Option<RunBlock>,
    pub output: Option<OutputBlock>,
    pub state: Option<StateBlock>,
    pub hamiltonian: Option<HamiltonianBlock>,
    pub observables: Option<Vec<Observable>>,
    pub born: Option<BornBlock>,
    pub exclusion: Option<ExclusionBlock>,
    pub trace: Option<TraceBlock>,
    pub boost: Option<BoostBlock>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n_sites: Option<usize>,
    pub dx: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBlock {
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(alias = "r_C")]
    pub r_c: Option<f64>,
    pub m0: Option<f64>,
    pub m: Option<f64>,
    pub hbar: Option<f64>,
    pub dim: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub dt: Option<f64>,
    pub n_steps: Option<usize>,
    pub n_traj: Option<usize>,
    pub base_seed: Option<u64>,
    pub snapshot_stride: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum StateBlock {
    Gaussian {
        x0: f64,
        sigma: f64,
        #[serde(default)]
        k0: f64,
    },
    TwoGaussian {
        weight_left: f64,
        x_left: f64,
        x_right: f64,
        sigma: f64,
    },
    Site {
        index: usize,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum HamiltonianBlock {
    Free,
    Harmonic { omega: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BornBlock {
    pub alpha_sq: f64,
    pub separation: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExclusionBlock {
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub r_c_min: Option<f64>,
    pub r_c_max: Option<f64>,
    pub resolution: Option<usize>,
    /// Extra bound records (BoundRecord schema), merged with the builtins.
    pub bounds_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceBlock {
    pub n_dim: Option<usize>,
    pub n_dofs: Option<usize>,
    pub dt: Option<f64>,
    pub n_steps: Option<usize>,
    pub seed: Option<u64>,
    /// "quartic" (default) or "harmonic".
    pub potential: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoostBlock {
    pub n_dim: Option<usize>,
    pub n_vectors: Option<usize>,
    pub n_rapidities: Option<usize>,
    pub rapidity_min: Option<f64>,
    pub rapidity_max: Option<f64>,
    pub seed: Option<u64>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub base_seed: Option<u64>,
    pub n_traj: Option<usize>,
    pub n_steps: Option<usize>,
    pub dt: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
}

pub fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError::new("config", e.to_string()))
}

pub fn apply_overrides(mut file: FileConfig, ov: &Overrides) -> Result<FileConfig> {
    if ov.out_dir.is_some() {
        file.output.get_or_insert_with(Default::default).dir = ov.out_dir.clone();
    }
    let run = file.run.get_or_insert_with(Default::default);
    if ov.base_seed.is_some() {
        run.base_seed = ov.base_seed;
    }
    if ov.n_traj.is_some() {
        run.n_traj = ov.n_traj;
    }
    if ov.n_steps.is_some() {
        run.n_steps = ov.n_steps;
    }
    if ov.dt.is_some() {
        run.dt = ov.dt;
    }
    if ov.lambda.is_some() || ov.gamma.is_some() {
        let params = file.params.get_or_insert_with(Default::default);
        if let Some(l) = ov.lambda {
            params.lambda = Some(l);
            params.gamma = None;
        }
        if let Some(g) = ov.gamma {
            params.gamma = Some(g);
            params.lambda = None;
        }
    }
    Ok(file)
}

fn require<T: Copy>(value: Option<T>, field: &str) -> Result<T> {
    value.ok_or_else(|| ConfigError::new(field, "missing required field"))
}

/// Fully resolved collapse parameters with both coupling forms recorded.
#[derive(Debug, Clone, Serialize)]
pub struct ParamsEcho {
    pub gamma: f64,
    pub lambda: f64,
    pub r_c: f64,
    pub m0: f64,
    pub m: f64,
    pub hbar: f64,
    pub dim: u32,
}

pub fn resolve_params(block: Option<&ParamsBlock>) -> Result<(CslParams, ParamsEcho)> {
    let block = block.ok_or_else(|| ConfigError::new("params", "missing required block"))?;
    let r_c = require(block.r_c, "params.r_c")?;
    let dim = require(block.dim, "params.dim")?;
    let (gamma, lambda) = match (block.gamma, block.lambda) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::new(
                "params.gamma",
                "gamma and lambda are mutually exclusive; give exactly one",
            ))
        }
        (None, None) => {
            return Err(ConfigError::new(
                "params.gamma",
                "one of gamma or lambda is required",
            ))
        }
        (Some(g), None) => (g, lambda_from_gamma(g, r_c, dim)),
        (None, Some(l)) => (gamma_from_lambda(l, r_c, dim), l),
    };
    let m0 = block.m0.unwrap_or(1.0);
    let m = block.m.unwrap_or(1.0);
    let hbar = block.hbar.unwrap_or(1.0);
    let params = CslParams::new(gamma, r_c, m0, m, hbar, dim)
        .map_err(|e| ConfigError::new("params", e.to_string()))?;
    let echo = ParamsEcho {
        gamma,
        lambda,
        r_c,
        m0,
        m,
        hbar,
        dim,
    };
    Ok((params, echo))
}

pub fn resolve_grid(block: Option<&GridBlock>) -> Result<Grid1D> {
    let block = block.ok_or_else(|| ConfigError::new("grid", "missing required block"))?;
    let n_sites = require(block.n_sites, "grid.n_sites")?;
    let dx = require(block.dx, "grid.dx")?;
    Grid1D::centered(n_sites, dx).map_err(|e| ConfigError::new("grid", e.to_string()))
}

pub fn resolve_state(block: Option<&StateBlock>, grid: &Grid1D) -> Result<Wavefunction> {
    let block = block.ok_or_else(|| ConfigError::new("state", "missing required block"))?;
    match block {
        StateBlock::Gaussian { x0, sigma, k0 } => Wavefunction::gaussian(grid, *x0, *sigma, *k0),
        StateBlock::TwoGaussian {
            weight_left,
            x_left,
            x_right,
            sigma,
        } => {
            if !(0.0..=1.0).contains(weight_left) {
                return Err(ConfigError::new(
                    "state.weight_left",
                    format!("must lie in [0, 1], got {weight_left}"),
                ));
            }
            Wavefunction::two_gaussian(
                grid,
                num_complex::Complex64::new(weight_left.sqrt(), 0.0),
                *x_left,
                num_complex::Complex64::new((1.0 - weight_left).sqrt(), 0.0),
                *x_right,
                *sigma,
            )
        }
        StateBlock::Site { index } => Wavefunction::site_eigenstate(grid, *index),
    }
    .map_err(|e| ConfigError::new("state", e.to_string()))
}

pub fn resolve_hamiltonian(
    block: Option<&HamiltonianBlock>,
    params: &CslParams,
) -> Option<Hamiltonian> {
    block.map(|b| match b {
        HamiltonianBlock::Free => Hamiltonian::free(params.m, params.hbar),
        HamiltonianBlock::Harmonic { omega } => {
            Hamiltonian::harmonic(params.m, params.hbar, *omega)
        }
    })
}

/// Metadata header lines shared by every CSV output.
pub fn csv_echo(echo: &ParamsEcho, base_seed: u64) -> Vec<(String, String)> {
    vec![
        ("lambda".into(), fmt_f64(echo.lambda)),
        ("gamma".into(), fmt_f64(echo.gamma)),
        ("r_c".into(), fmt_f64(echo.r_c)),
        ("m0".into(), fmt_f64(echo.m0)),
        ("m".into(), fmt_f64(echo.m)),
        ("hbar".into(), fmt_f64(echo.hbar)),
        ("dim".into(), echo.dim.to_string()),
        ("base_seed".into(), base_seed.to_string()),
    ]
}
