//! File formats. Floats are written with `f64`'s `Display`, which is the
//! shortest decimal that parses back to the same value.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use disperse_core::posterior::McmcChain;
use disperse_core::prior::NetPrior;
use disperse_core::{DispersionFn, Observations, SeedRecord};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const OBSERVATIONS_HEADER: &str = "i,t,x,y";
pub const DIAGNOSTICS_HEADER: &str = "i,z,f,w";
pub const RESULT_HEADER: &str = "experiment,n,replicate,stat_name,value,stderr,seed";

/// JSON form of a dispersion function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FnRecord {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl From<&DispersionFn> for FnRecord {
    fn from(s: &DispersionFn) -> Self {
        Self {
            knots: s.knots().to_vec(),
            values: s.values().to_vec(),
        }
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| HarnessError::io(dir, e))?;
    tmp.write_all(contents)
        .map_err(|e| HarnessError::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| HarnessError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| HarnessError::Json {
        path: path.into(),
        source,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn observations_csv(obs: &Observations) -> String {
    let mut out = String::with_capacity(32 * (obs.n() + 1));
    out.push_str(OBSERVATIONS_HEADER);
    out.push('\n');
    for (i, x) in obs.values().iter().enumerate() {
        let _ = write!(out, "{i},{},{x},", obs.time(i));
        if i > 0 {
            let _ = write!(out, "{}", obs.increments()[i - 1]);
        }
        out.push('\n');
    }
    out
}

/// Reads an observations CSV. Only the `x` column is used; increments are
/// recomputed from it so they match the writer's values exactly.
pub fn parse_observations_csv(text: &str, path: &Path) -> Result<Observations> {
    let err = |line: usize, reason: &str| HarnessError::Parse {
        path: path.into(),
        line,
        reason: reason.into(),
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(OBSERVATIONS_HEADER) {
        return Err(err(1, "expected header i,t,x,y"));
    }
    let mut values = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(err(k + 2, "expected 4 columns"));
        }
        let i: usize = cols[0].parse().map_err(|_| err(k + 2, "bad index"))?;
        if i != values.len() {
            return Err(err(k + 2, "indices must run 0, 1, 2, ..."));
        }
        values.push(
            cols[2]
                .parse::<f64>()
                .map_err(|_| err(k + 2, "bad x value"))?,
        );
    }
    Ok(Observations::from_values(values, None)?)
}

pub fn read_observations(path: &Path) -> Result<Observations> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    parse_observations_csv(&text, path)
}

/// Rows `(z_i, f_i, w_i)`, with `i` starting at 1.
pub fn diagnostics_csv(z: &[f64], f: &[f64], w: &[f64]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for (i, ((z, f), w)) in z.iter().zip(f).zip(w).enumerate() {
        let _ = writeln!(out, "{},{z},{f},{w}", i + 1);
    }
    out
}

pub fn chain_csv(chain: &McmcChain) -> String {
    let k = chain.states.first().map_or(0, |s| s.values().len());
    let mut out = String::from("iter,accepted");
    for j in 0..k {
        let _ = write!(out, ",v_{j}");
    }
    out.push('\n');
    for ((s, it), acc) in chain
        .states
        .iter()
        .zip(&chain.iterations)
        .zip(&chain.accepted_at)
    {
        let _ = write!(out, "{it},{}", u8::from(*acc));
        for v in s.values() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetManifest {
    pub resolution: f64,
    pub count: usize,
    pub params: crate::config::ParamsConfig,
    pub knots: Vec<f64>,
    pub level_step: f64,
    pub level_count: usize,
}

impl NetManifest {
    pub fn new(net: &NetPrior) -> Self {
        let p = net.params();
        Self {
            resolution: net.resolution(),
            count: net.len(),
            params: crate::config::ParamsConfig {
                kappa: p.kappa,
                k_upper: p.k_upper,
                m_lip: p.m_lip,
            },
            knots: net.knots().to_vec(),
            level_step: net.level_step(),
            level_count: net.level_count(),
        }
    }
}

/// One line of a result CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: &'static str,
    pub n: usize,
    pub replicate: usize,
    pub stat_name: String,
    pub value: f64,
    /// Written as an empty field when absent.
    pub stderr: Option<f64>,
    pub seed: Option<SeedRecord>,
}

pub fn result_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},",
            r.experiment, r.n, r.replicate, r.stat_name, r.value
        );
        if let Some(se) = r.stderr {
            let _ = write!(out, "{se}");
        }
        out.push(',');
        if let Some(seed) = r.seed {
            let _ = write!(out, "{seed}");
        }
        out.push('\n');
    }
    out
}
