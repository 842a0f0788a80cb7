//! Flat `key = value` configuration files. Command-line flags take
//! precedence over file values, which take precedence over defaults.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};

pub const KEYS: &[&str] = &[
    "env",
    "backend",
    "report",
    "w_max",
    "d_max",
    "max_iterations",
    "tactic_timeout",
    "global_timeout",
    "candidates_per_query",
    "remote_timeout",
    "remote_retries",
    "runs",
    "workers",
    "min_subterm_size",
    "skip_sorts",
    "emit_verbose",
    "dedup_premises",
    "max_depth",
    "neg_ratio",
    "casing",
    "chunk_size",
    "normalize_ws",
];

/// Stand-in for "no timeout"; far enough away that `Instant` arithmetic
/// cannot overflow.
pub const NO_TIMEOUT: Duration = Duration::from_secs(100 * 365 * 86_400);

#[derive(Clone, Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                bail!("line {}: unknown key `{k}`", i + 1);
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                bail!("line {}: duplicate key `{k}`", i + 1);
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.values.get(key).map(String::as_str)
    }

    /// `flag`, else the file value parsed with `parse`, else `default`.
    pub fn pick_with<T>(&self, flag: Option<T>, key: &str, default: T, parse: impl Fn(&str) -> Result<T>) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.raw(key) {
            Some(s) => parse(s).with_context(|| format!("config key `{key}`")),
            None => Ok(default),
        }
    }

    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.pick_with(flag, key, default, |s| s.parse::<T>().map_err(|e| anyhow!("`{s}`: {e}")))
    }
}

/// A limit that may be switched off with `none`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limit(pub Option<usize>);

impl FromStr for Limit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" | "inf" => Ok(Limit(None)),
            _ => s.parse().map(|n| Limit(Some(n))).map_err(|e| format!("{e}")),
        }
    }
}

/// A duration like `5s` or `250ms`; `none` disables the timeout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Timeout(pub Duration);

impl FromStr for Timeout {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "none" {
            return Ok(Timeout(NO_TIMEOUT));
        }
        humantime::parse_duration(s).map(Timeout).map_err(|e| e.to_string())
    }
}
