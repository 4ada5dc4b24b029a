//! Flat `key=value` settings shared by config files and run manifests.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Keys a manifest records about a finished run. They are skipped when a
/// manifest is read back as a config file.
pub const RECORD_KEYS: [&str; 6] = [
    "command",
    "argv",
    "duration_s",
    "stop",
    "iterations",
    "final_energy",
];

#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, got `{line}`", n + 1))?;
            let key = k.trim().replace('_', "-");
            if RECORD_KEYS.contains(&key.replace('-', "_").as_str()) {
                continue;
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Sets `key` when `value` is given, overriding any config entry.
    pub fn overlay<T: Display>(&mut self, key: &str, value: &Option<T>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v.to_string());
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| anyhow!("invalid value `{v}` for {key}: {e}"))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Fails if any key outside `allowed` is set.
    pub fn check_known(&self, allowed: &[&str], context: &str) -> Result<()> {
        let unknown: Vec<&str> = self
            .values
            .keys()
            .map(String::as_str)
            .filter(|k| !allowed.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            bail!("{context} does not accept: {}", unknown.join(", "))
        }
    }
}

/// Ordered `key=value` lines written next to every output.
#[derive(Debug, Default)]
pub struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text: String = self
            .lines
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

pub fn parse_grid(text: &str) -> Result<Vec<usize>> {
    let dims = text
        .split('x')
        .map(|d| {
            d.trim()
                .parse::<usize>()
                .map_err(|e| anyhow!("invalid grid `{text}`: {e}"))
        })
        .collect::<Result<Vec<_>>>()?;
    if !(2..=3).contains(&dims.len()) {
        bail!("grid must be MxN or MxNxP, got `{text}`");
    }
    Ok(dims)
}

pub fn format_grid(dims: &[usize]) -> String {
    dims.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("x")
}

pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("invalid number `{v}` in `{text}`: {e}"))
        })
        .collect()
}
