//! Effective run configurations. Every field has a default; a `--config`
//! JSON file is applied first and command-line flags override it. The
//! resulting struct is what gets echoed into output files.

use std::path::{Path, PathBuf};

use disperse_core::experiments::Backend;
use disperse_core::{make_piecewise_linear, ClassParams, DispersionFn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::io::FnRecord;

pub const OUT_DIR_ENV: &str = "DISPERSE_OUT_DIR";
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub kappa: f64,
    pub k_upper: f64,
    pub m_lip: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self {
            kappa: 0.5,
            k_upper: 2.0,
            m_lip: 1.0,
        }
    }
}

impl ParamsConfig {
    pub fn build(&self) -> Result<ClassParams> {
        Ok(ClassParams::new(self.kappa, self.k_upper, self.m_lip)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendName {
    Net,
    Mcmc,
}

impl From<BackendName> for Backend {
    fn from(b: BackendName) -> Self {
        match b {
            BackendName::Net => Backend::Net,
            BackendName::Mcmc => Backend::Mcmc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub params: ParamsConfig,
    pub s0: String,
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
    pub out: PathBuf,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            params: ParamsConfig::default(),
            s0: "linear:1,1.5".into(),
            n: 1000,
            seed: DEFAULT_SEED,
            stream: 0,
            out: "observations.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoglikConfig {
    pub params: ParamsConfig,
    pub obs: PathBuf,
    pub s: String,
    /// Reference function for the ratio, decomposition and diagnostics.
    pub s0: Option<String>,
    pub diagnostics: Option<PathBuf>,
}

impl Default for LoglikConfig {
    fn default() -> Self {
        Self {
            params: ParamsConfig::default(),
            obs: "observations.csv".into(),
            s: "linear:1,1.5".into(),
            s0: None,
            diagnostics: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PosteriorConfig {
    pub params: ParamsConfig,
    pub obs: PathBuf,
    /// Centre of the reported L2 balls.
    pub s0: String,
    pub backend: BackendName,
    pub radii: Vec<f64>,
    pub mean_grid_points: usize,
    /// Net resolution (net backend).
    pub eps: f64,
    pub net_cap: usize,
    /// Knot count (MCMC); `None` uses `max(3, round(n^(1/3)))`.
    pub knots: Option<usize>,
    /// Iterations (MCMC); `None` uses 2000 sweeps.
    pub iters: Option<usize>,
    pub step: Option<f64>,
    pub thin: usize,
    pub seed: u64,
    pub stream: u64,
    pub summary: PathBuf,
    pub chain: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Default for PosteriorConfig {
    fn default() -> Self {
        Self {
            params: ParamsConfig::default(),
            obs: "observations.csv".into(),
            s0: "linear:1,1.5".into(),
            backend: BackendName::Mcmc,
            radii: vec![0.05, 0.1, 0.2, 0.4],
            mean_grid_points: 21,
            eps: 0.5,
            net_cap: disperse_core::prior::DEFAULT_MEMBER_CAP,
            knots: None,
            iters: None,
            step: None,
            thin: 10,
            seed: DEFAULT_SEED,
            stream: 1,
            summary: "posterior.json".into(),
            chain: None,
            manifest: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub params: ParamsConfig,
    pub s0: String,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// `None` picks `c` so that `eps_tilde(n_min) = (K - kappa) / 2`.
    pub eps_const: Option<f64>,
    pub radius_multipliers: Vec<f64>,
    pub backend: BackendName,
    pub base_seed: u64,
    pub knot_scale: f64,
    pub mcmc_sweeps: usize,
    pub mcmc_step: Option<f64>,
    pub net_cap: usize,
    pub out: PathBuf,
    pub summary: PathBuf,
    pub plot: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            params: ParamsConfig::default(),
            s0: "linear:1,1.5".into(),
            n_grid: vec![250, 500, 1000, 2000, 4000, 8000],
            replicates: 20,
            eps_const: None,
            radius_multipliers: vec![1.0, 2.0, 4.0, 8.0],
            backend: BackendName::Mcmc,
            base_seed: DEFAULT_SEED,
            knot_scale: 1.0,
            mcmc_sweeps: 2000,
            mcmc_step: None,
            net_cap: disperse_core::prior::DEFAULT_MEMBER_CAP,
            out: "contraction.csv".into(),
            summary: "contraction.json".into(),
            plot: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    pub params: ParamsConfig,
    pub s0: String,
    pub eps_const: Option<f64>,
    pub base_seed: u64,
    /// Alternative used for the Riemann-sum check.
    pub riemann_s: String,
    pub riemann_log2_n: (u32, u32),
    pub kl_calibration_n: usize,
    pub kl_ns: Vec<usize>,
    pub martingale_ns: Vec<usize>,
    pub martingale_net_eps: f64,
    pub martingale_reps: usize,
    pub martingale_cap: usize,
    pub tail_ns: Vec<usize>,
    pub tail_net_eps: f64,
    pub tail_c1: f64,
    pub tail_reps: usize,
    pub tail_cap: usize,
    pub out: PathBuf,
    pub summary: PathBuf,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            params: ParamsConfig::default(),
            s0: "linear:1,1.5".into(),
            eps_const: None,
            base_seed: DEFAULT_SEED,
            riemann_s: "knots:0,1.2;0.333333333333333,1.5;0.7,1.3;1,1.6".into(),
            riemann_log2_n: (4, 12),
            kl_calibration_n: 250,
            kl_ns: vec![500, 1000, 2000],
            martingale_ns: vec![500, 2000, 8000],
            martingale_net_eps: 0.25,
            martingale_reps: 100,
            martingale_cap: 2000,
            tail_ns: vec![250, 1000, 4000],
            tail_net_eps: 0.25,
            tail_c1: 0.3,
            tail_reps: 100,
            tail_cap: 10_000,
            out: "lemmas.csv".into(),
            summary: "lemmas.json".into(),
        }
    }
}

/// Reads a JSON config file, or the defaults when `path` is `None`.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| HarnessError::io(p, e))?;
            serde_json::from_str(&text).map_err(|source| HarnessError::Json {
                path: p.into(),
                source,
            })
        }
    }
}

/// Output directory: `--out-dir`, else the environment variable, else `.`.
pub fn out_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Relative output paths are placed under `dir`.
pub fn resolve(dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        dir.join(path)
    }
}

fn syntax(text: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::SpecSyntax {
        text: text.into(),
        reason: reason.into(),
    }
}

fn number(text: &str, field: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| syntax(text, format!("{field:?} is not a number")))
}

/// Parses `const:<v>`, `linear:<v0>,<v1>`, `knots:<t>,<v>;<t>,<v>;...` or
/// `file:<path>` (JSON `{"knots": [...], "values": [...]}`) and validates
/// the result against `params`.
pub fn parse_s0_spec(text: &str, params: &ClassParams) -> Result<DispersionFn> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| syntax(text, "expected <kind>:<args>"))?;
    let (knots, values) = match kind {
        "const" => (vec![0.0, 1.0], vec![number(text, rest)?; 2]),
        "linear" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(syntax(text, "linear takes exactly two values"));
            }
            (
                vec![0.0, 1.0],
                vec![number(text, parts[0])?, number(text, parts[1])?],
            )
        }
        "knots" => {
            let mut knots = Vec::new();
            let mut values = Vec::new();
            for pair in rest.split(';') {
                let (t, v) = pair
                    .split_once(',')
                    .ok_or_else(|| syntax(text, "expected t,v pairs"))?;
                knots.push(number(text, t)?);
                values.push(number(text, v)?);
            }
            (knots, values)
        }
        "file" => {
            let path = Path::new(rest);
            let raw = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
            let rec: FnRecord =
                serde_json::from_str(&raw).map_err(|source| HarnessError::Json {
                    path: path.into(),
                    source,
                })?;
            (rec.knots, rec.values)
        }
        other => return Err(syntax(text, format!("unknown kind {other:?}"))),
    };
    Ok(make_piecewise_linear(knots, values, params)?)
}
