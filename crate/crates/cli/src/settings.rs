//! Layered run settings: command-line flags, then `GRAPHFORGE_*` variables
//! (both handled by clap), then a `key = value` config file, then defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;

/// Seed used when none is given anywhere.
pub const DEFAULT_SEED: u64 = 1729;

pub const CONFIG_KEYS: &[&str] = &[
    "strategy",
    "p",
    "trials",
    "target_edges",
    "seed",
    "out",
    "format",
    "second_gen",
    "rows",
    "backbone_len",
    "pairing",
    "max_qubits",
    "samples",
    "dump_graph",
    "runs_out",
];

/// An invalid run specification. Exits with status 2.
#[derive(Debug)]
pub struct SpecError(pub String);

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SpecError {}

pub fn spec_error(msg: impl Into<String>) -> anyhow::Error {
    SpecError(msg.into()).into()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| spec_error(format!("cannot read config {}: {e}", path.display())))?;
                Self::parse(&text).map_err(|e| spec_error(format!("{}: {e}", path.display())))
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key `{key}`", n + 1));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Flag (or environment) value if given, else the config entry, else the
    /// default.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> anyhow::Result<T>
    where
        T::Err: fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.raw(key) {
            Some(s) => s.parse().map_err(|e| spec_error(format!("config `{key}`: {e}"))),
            None => Ok(default),
        }
    }

    pub fn pick_optional_path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.raw(key).map(PathBuf::from))
    }

    /// Comma-separated list; a non-empty flag list wins outright.
    pub fn pick_list<T: FromStr + Clone>(&self, flag: Vec<T>, key: &str, default: &[T]) -> anyhow::Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        if !flag.is_empty() {
            return Ok(flag);
        }
        match self.raw(key) {
            Some(s) => s
                .split(',')
                .map(|item| item.trim().parse().map_err(|e| spec_error(format!("config `{key}`: {e}"))))
                .collect(),
            None => Ok(default.to_vec()),
        }
    }
}

pub fn check_probabilities(ps: &[f64]) -> anyhow::Result<()> {
    if ps.is_empty() {
        return Err(spec_error("at least one p is required"));
    }
    for &p in ps {
        if !(p > 0.0 && p <= 1.0) {
            return Err(spec_error(format!("p must lie in (0, 1], got {p}")));
        }
    }
    Ok(())
}

pub fn check_positive(name: &str, value: u64) -> anyhow::Result<()> {
    if value == 0 {
        return Err(spec_error(format!("{name} must be at least 1")));
    }
    Ok(())
}
