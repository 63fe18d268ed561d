//! Chain files, π sources and output helpers.

use std::fs;
use std::path::Path;

use revlab::chain::{stationary_distribution, MASS_TOL};
use revlab::linalg::DenseMatrix;
use revlab::{Distribution, Generator};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Tolerance on the mass of a π read from a file.
pub const PI_FILE_TOL: f64 = 1e-9;
/// A supplied diagonal further than this from −(row total) draws a warning.
pub const DIAGONAL_WARN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<String>>,
    pub n: usize,
    /// Row-major n·n rate matrix.
    pub rates: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct LoadedChain {
    pub generator: Generator,
    pub pi: Option<Distribution>,
    pub warnings: Vec<String>,
}

impl ChainFile {
    pub fn from_generator(g: &Generator, pi: Option<&Distribution>) -> Self {
        Self {
            states: g.state_space().labels().map(<[String]>::to_vec),
            n: g.n(),
            rates: g.rates().as_slice().to_vec(),
            pi: pi.map(|p| p.weights().to_vec()),
        }
    }

    /// Validates and converts; diagonals are recomputed from the
    /// off-diagonal rates.
    pub fn into_chain(self) -> Result<LoadedChain, CliError> {
        let n = self.n;
        if self.rates.len() != n * n {
            return Err(CliError::Parse(format!(
                "rates has {} entries, expected n·n = {}",
                self.rates.len(),
                n * n
            )));
        }
        let rates = DenseMatrix::from_row_major(n, n, self.rates.clone())
            .map_err(|e| CliError::Parse(e.to_string()))?;
        let mut generator = Generator::from_off_diagonal(rates)?;
        let mut warnings = Vec::new();
        for x in 0..n {
            let supplied = self.rates[x * n + x];
            let implied = generator.rate(x, x);
            if !supplied.is_finite() || (supplied - implied).abs() > DIAGONAL_WARN_TOL {
                warnings.push(format!(
                    "row {x}: supplied diagonal {supplied} replaced by {implied}"
                ));
            }
        }
        if let Some(labels) = self.states {
            generator = generator.with_labels(labels)?;
        }
        let pi = self.pi.map(load_weights).transpose()?;
        if let Some(p) = &pi {
            if p.len() != n {
                return Err(CliError::Invariant(format!("pi has {} entries for {n} states", p.len())));
            }
        }
        Ok(LoadedChain {
            generator,
            pi,
            warnings,
        })
    }
}

/// Accepts weights summing to 1 within [`PI_FILE_TOL`] and rescales them
/// to full precision.
pub fn load_weights(w: Vec<f64>) -> Result<Distribution, CliError> {
    let d = Distribution::with_tolerance(w, PI_FILE_TOL)?;
    let sum: f64 = d.weights().iter().sum();
    if (sum - 1.0).abs() > MASS_TOL {
        return Ok(Distribution::from_unnormalized(d.weights().to_vec())?);
    }
    Ok(d)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn load_chain(path: &Path) -> Result<LoadedChain, CliError> {
    let text = read_text(path)?;
    let file: ChainFile =
        serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    file.into_chain()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PiFile {
    Bare(Vec<f64>),
    Object { pi: Vec<f64> },
}

/// Resolves `--pi`: "stationary", an inline comma list, or a JSON file
/// holding an array or an object with a "pi" field. Without the flag the
/// chain file's own π is used.
pub fn resolve_pi(flag: Option<&str>, chain: &LoadedChain) -> Result<Distribution, CliError> {
    let pi = match flag {
        None => chain
            .pi
            .clone()
            .ok_or_else(|| CliError::Parse("no π: pass --pi or add \"pi\" to the chain file".into()))?,
        Some("stationary") => stationary_distribution(&chain.generator)?,
        Some(s) => match parse_list(s) {
            Some(w) => load_weights(w)?,
            None => {
                let text = read_text(Path::new(s))?;
                let w = match serde_json::from_str::<PiFile>(&text)
                    .map_err(|e| CliError::Parse(format!("{s}: {e}")))?
                {
                    PiFile::Bare(w) | PiFile::Object { pi: w } => w,
                };
                load_weights(w)?
            }
        },
    };
    if pi.len() != chain.generator.n() {
        return Err(CliError::Invariant(format!(
            "π has {} entries for {} states",
            pi.len(),
            chain.generator.n()
        )));
    }
    Ok(pi)
}

/// Comma-separated reals; `None` if any item fails to parse.
pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    let items: Option<Vec<f64>> = s.split(',').map(|t| revlab::extended::parse(t)).collect();
    items.filter(|v| !v.is_empty())
}

/// State labels when the generator has them, else 0-based indices.
pub fn parse_states(s: &str, g: &Generator) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            if let Some(ls) = g.state_space().labels() {
                return ls
                    .iter()
                    .position(|l| l == t)
                    .ok_or_else(|| CliError::Parse(format!("unknown state {t:?}")));
            }
            t.parse::<usize>()
                .map_err(|_| CliError::Parse(format!("unknown state {t:?}")))
        })
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Invariant(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// 17 significant digits in scientific notation; ±∞ as "inf"/"-inf".
pub fn csv_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn csv_opt(v: Option<f64>) -> String {
    v.map(csv_number).unwrap_or_default()
}
