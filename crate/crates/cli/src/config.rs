//! Run configuration from flags and an optional `key = value` file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use augmix_core::adapt::AdaptConfig;
use augmix_core::assembly::{Method, MethodConfig};
use augmix_core::femspace::Family;
use augmix_core::problems::{BoundaryKind, Problem};
use serde::{Serialize, Serializer};

use crate::CliError;

/// Benchmark selector: a checkerboard data set or a manufactured solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataSel {
    Kellogg(usize),
    Linear,
    Sine,
}

impl DataSel {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "linear" => Ok(DataSel::Linear),
            "sine" => Ok(DataSel::Sine),
            _ => match s.trim_start_matches("data").parse::<usize>() {
                Ok(d) if (1..=4).contains(&d) => Ok(DataSel::Kellogg(d)),
                _ => Err(CliError::Usage(format!("unknown data '{s}' (expected 1..4, linear or sine)"))),
            },
        }
    }

    pub fn problem(self, bc: BoundaryKind) -> Result<Problem, CliError> {
        Ok(match self {
            DataSel::Kellogg(d) => Problem::kellogg(d, bc)?,
            DataSel::Linear => Problem::linear(bc),
            DataSel::Sine => Problem::sine(bc),
        })
    }
}

impl fmt::Display for DataSel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSel::Kellogg(d) => write!(f, "data{d}"),
            DataSel::Linear => f.write_str("linear"),
            DataSel::Sine => f.write_str("sine"),
        }
    }
}

impl Serialize for DataSel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub method: Method,
    pub space: Family,
    pub data: DataSel,
    pub bc: BoundaryKind,
    pub symmetric: bool,
    pub theta_mark: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub max_elements: usize,
    /// Initial mesh has `(2n)²` squares.
    pub initial_n: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(method: Method, data: DataSel, bc: BoundaryKind) -> Self {
        Self {
            method,
            space: Family::Rt0P1,
            data,
            bc,
            symmetric: false,
            theta_mark: 0.3,
            tolerance: 0.010,
            max_iterations: 400,
            max_elements: 100_000,
            initial_n: 4,
            seed: 0,
            out: PathBuf::from("out"),
        }
    }

    /// Directory name used by `table` to find the artifacts of a run.
    pub fn label(&self) -> String {
        let sym = if self.symmetric { "-sym" } else { "" };
        format!("{}-{}-{}-{}{sym}", self.method.label(), self.space.label(), self.bc.label(), self.data)
    }

    pub fn adapt_config(&self) -> Result<AdaptConfig, CliError> {
        let method = if self.symmetric {
            MethodConfig::symmetric(self.method).map_err(|e| CliError::Usage(e.to_string()))?
        } else {
            MethodConfig::new(self.method)
        };
        let mut cfg = AdaptConfig::new(method, self.space);
        cfg.theta_mark = self.theta_mark;
        cfg.tolerance = self.tolerance;
        cfg.max_iterations = self.max_iterations;
        cfg.max_elements = self.max_elements;
        cfg.initial_n = self.initial_n;
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    /// Applies `key = value` settings; unknown keys are rejected.
    pub fn apply(&mut self, settings: &BTreeMap<String, String>) -> Result<(), CliError> {
        for (key, value) in settings {
            let bad = |what: &str| CliError::Usage(format!("{key}: '{value}' is not {what}"));
            match key.as_str() {
                "method" => self.method = Method::parse(value).map_err(|e| CliError::Usage(e.to_string()))?,
                "space" => self.space = Family::parse(value).map_err(|e| CliError::Usage(e.to_string()))?,
                "data" => self.data = DataSel::parse(value)?,
                "bc" => self.bc = BoundaryKind::parse(value).map_err(|e| CliError::Usage(e.to_string()))?,
                "symmetric" => self.symmetric = value.parse().map_err(|_| bad("a boolean"))?,
                "theta_mark" => self.theta_mark = value.parse().map_err(|_| bad("a number"))?,
                "tolerance" => self.tolerance = value.parse().map_err(|_| bad("a number"))?,
                "max_iterations" => self.max_iterations = value.parse().map_err(|_| bad("a count"))?,
                "max_elements" => self.max_elements = value.parse().map_err(|_| bad("a count"))?,
                "initial_n" => self.initial_n = value.parse().map_err(|_| bad("a count"))?,
                "seed" => self.seed = value.parse().map_err(|_| bad("an integer"))?,
                "out" => self.out = PathBuf::from(value),
                other => return Err(CliError::Usage(format!("unknown configuration key '{other}'"))),
            }
        }
        Ok(())
    }
}

/// Parses `key = value` lines; `#` starts a comment, dashes in keys are
/// read as underscores.
pub fn parse_settings(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        out.insert(k.trim().replace('-', "_"), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_settings(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_settings(&text)
}
