//! Flat `section.key=value` configuration with defaults, file and overrides.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("missing required key {0:?}")]
    Missing(String),
    #[error("key {key:?}: cannot parse {value:?}")]
    Value { key: String, value: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
}

/// Every accepted key with its default; `None` marks keys without one.
const KEYS: &[(&str, Option<&str>)] = &[
    ("params.n", None),
    ("params.p", None),
    ("params.gamma", None),
    ("params.alpha", Some("0")),
    ("params.beta", Some("0")),
    ("params.kind", None),
    ("params.p0", None),
    ("params.q0", None),
    ("grid.r_min", Some("1e-3")),
    ("grid.r_max", Some("1e4")),
    ("grid.nodes_per_decade", Some("64")),
    ("solver.mode", Some("extremal")),
    ("solver.max_iters", Some("500")),
    ("solver.tol_j", Some("1e-12")),
    ("solver.tol_res", Some("1e-9")),
    ("solver.scale_fix", Some("half_mass_radius")),
    ("solver.init", Some("power_law_bump")),
    ("io.input", None),
    ("io.init_file", None),
    ("io.direction", None),
    ("io.seed", Some("0")),
    ("verify.suite", Some("scaling,inequality,lorentz,asymptotics,decay,pohozaev,hardy,mass")),
    ("verify.trials", Some("100")),
    ("hardy.radii", Some("0.5,1,2,4")),
];

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

/// Resolved configuration. Keys are kept sorted, so serializing the map is
/// deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Defaults, then the file, then `key=value` overrides in order.
    pub fn resolve(file: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (k, v) in KEYS {
            if let Some(v) = v {
                cfg.values.insert((*k).into(), (*v).into());
            }
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.display().to_string(),
                source,
            })?;
            cfg.merge_text(&text)?;
        }
        for (i, o) in overrides.iter().enumerate() {
            let (k, v) = split(o).ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: o.clone(),
            })?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split(line).ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.into(),
            })?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !known(key) {
            return Err(ConfigError::UnknownKey(key.into()));
        }
        self.values.insert(key.into(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| ConfigError::Value {
                    key: key.into(),
                    value: v.into(),
                })
            })
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        self.parse(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, ConfigError> {
        let v = self.get(key).ok_or_else(|| ConfigError::Missing(key.into()))?;
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|_| ConfigError::Value {
                    key: key.into(),
                    value: v.into(),
                })
            })
            .collect()
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// The file form, one `key=value` per line; resolving it reproduces self.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

fn split(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty()).then_some((k, v))
}
