//! Run configuration: a TOML file, then command-line overrides, with the API
//! key falling back to `STREETVIEW_API_KEY`.
//!
//! Sections are only for readability; keys are flattened, so
//!
//! ```toml
//! city = "bangkok"
//! [sampling]
//! seed = 7
//! ```
//!
//! is the same as putting `seed = 7` at the top level.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use roadsense_core::segment::DEFAULT_TARGET_M;
use roadsense_core::HighwayClass;
use serde_json::json;
use toml::Value;

use crate::streetview::DEFAULT_BASE_URL;

pub const API_KEY_ENV: &str = "STREETVIEW_API_KEY";

pub const KEYS: [&str; 17] = [
    "city",
    "osm_path",
    "classes",
    "target_m",
    "sample_n",
    "seed",
    "base_url",
    "max_concurrency",
    "rate_per_s",
    "retries",
    "backoff_ms",
    "out_dir",
    "api_key",
    "download_images",
    "fixed_clock",
    "stratify_by_class",
    "skip_degenerate",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("unknown config key `{key}`{}; valid keys: {}", suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default(), KEYS.join(", "))]
    UnknownKey { key: String, suggestion: Option<String> },
    #[error("config key `{key}`: expected {expected}, found {found}")]
    Type {
        key: String,
        expected: &'static str,
        found: String,
    },
    #[error("config key `{key}` is required")]
    Missing { key: &'static str },
    #[error("config key `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("config key `{key}` appears in more than one section")]
    Duplicate { key: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub city: String,
    pub osm_path: PathBuf,
    pub classes: BTreeSet<HighwayClass>,
    pub target_m: f64,
    pub sample_n: usize,
    pub seed: u64,
    pub base_url: String,
    pub max_concurrency: usize,
    pub rate_per_s: f64,
    pub retries: u32,
    pub backoff_ms: u64,
    pub out_dir: PathBuf,
    /// Never written to any artifact.
    pub api_key: Option<String>,
    pub download_images: bool,
    /// Timestamp recorded as `queried_at` on every query, for reproducible
    /// runs. `None` uses the wall clock.
    pub fixed_clock: Option<String>,
    pub stratify_by_class: bool,
    pub skip_degenerate: bool,
}

impl RunConfig {
    /// The resolved configuration as echoed into the run manifest. The API
    /// key is replaced by a marker and `out_dir` (where the manifest itself
    /// lives) is left out so relocated runs compare equal.
    pub fn manifest_json(&self) -> serde_json::Value {
        json!({
            "city": self.city,
            "osm_path": self.osm_path.display().to_string(),
            "classes": self.classes.iter().map(HighwayClass::as_str).collect::<Vec<_>>(),
            "target_m": self.target_m,
            "sample_n": self.sample_n,
            "seed": self.seed,
            "base_url": self.base_url,
            "max_concurrency": self.max_concurrency,
            "rate_per_s": self.rate_per_s,
            "retries": self.retries,
            "backoff_ms": self.backoff_ms,
            "api_key": if self.api_key.is_some() { "REDACTED" } else { "unset" },
            "download_images": self.download_images,
            "fixed_clock": self.fixed_clock,
            "stratify_by_class": self.stratify_by_class,
            "skip_degenerate": self.skip_degenerate,
        })
    }
}

/// Key/value pairs that take precedence over the config file.
pub type Overrides = BTreeMap<String, Value>;

fn suggest(key: &str) -> Option<String> {
    KEYS.iter()
        .map(|k| (strsim::levenshtein(key, k), *k))
        .filter(|(d, _)| *d <= 2)
        .min()
        .map(|(_, k)| k.to_string())
}

fn check_key(key: &str) -> Result<(), ConfigError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(ConfigError::UnknownKey {
            key: key.into(),
            suggestion: suggest(key),
        })
    }
}

fn flatten(table: toml::Table, out: &mut BTreeMap<String, Value>) -> Result<(), ConfigError> {
    for (k, v) in table {
        match v {
            Value::Table(inner) => flatten(inner, out)?,
            v => {
                check_key(&k)?;
                if out.insert(k.clone(), v).is_some() {
                    return Err(ConfigError::Duplicate { key: k });
                }
            }
        }
    }
    Ok(())
}

fn type_error(key: &str, expected: &'static str, v: &Value) -> ConfigError {
    ConfigError::Type {
        key: key.into(),
        expected,
        found: format!("{} `{v}`", v.type_str()),
    }
}

struct Resolver(BTreeMap<String, Value>);

impl Resolver {
    fn string(&self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(type_error(key, "a string", v)),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(type_error(key, "a number", v)),
        }
    }

    fn unsigned(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            // u64 values above i64::MAX can only be written as strings
            Some(Value::String(s)) if s.parse::<u64>().is_ok() => Ok(s.parse().ok()),
            Some(v) => Err(type_error(key, "a non-negative integer", v)),
        }
    }

    fn boolean(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(type_error(key, "true or false", v)),
        }
    }

    fn classes(&self, key: &str) -> Result<Option<BTreeSet<HighwayClass>>, ConfigError> {
        let parse = |s: &str| -> BTreeSet<HighwayClass> {
            s.split(',')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(HighwayClass::from_tag)
                .collect()
        };
        match self.0.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(parse(s))),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(HighwayClass::from_tag(s.trim())),
                    v => Err(type_error(key, "a list of strings", v)),
                })
                .collect::<Result<_, _>>()
                .map(Some),
            Some(v) => Err(type_error(key, "a list of strings", v)),
        }
    }
}

fn narrow<T: TryFrom<u64>>(key: &'static str, v: u64) -> Result<T, ConfigError> {
    T::try_from(v).map_err(|_| ConfigError::Invalid {
        key,
        message: format!("{v} is too large"),
    })
}

/// Resolves a configuration: `path` (if any), then `overrides`, then
/// `env_api_key` as a fallback for the API key only.
pub fn load_config(path: Option<&Path>, overrides: &Overrides, env_api_key: Option<String>) -> Result<RunConfig, ConfigError> {
    let mut values = BTreeMap::new();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        let table: toml::Table = text.parse().map_err(|source| ConfigError::Toml {
            path: path.into(),
            source,
        })?;
        flatten(table, &mut values)?;
    }
    for (k, v) in overrides {
        check_key(k)?;
        values.insert(k.clone(), v.clone());
    }
    let r = Resolver(values);

    let city = r.string("city")?.ok_or(ConfigError::Missing { key: "city" })?;
    if city.trim().is_empty() {
        return Err(ConfigError::Invalid {
            key: "city",
            message: "must not be empty".into(),
        });
    }
    let target_m = r.float("target_m")?.unwrap_or(DEFAULT_TARGET_M);
    if !(target_m.is_finite() && target_m > 0.0) {
        return Err(ConfigError::Invalid {
            key: "target_m",
            message: format!("must be a positive length in meters, got {target_m}"),
        });
    }
    let max_concurrency = narrow("max_concurrency", r.unsigned("max_concurrency")?.unwrap_or(4))?;
    if max_concurrency == 0 {
        return Err(ConfigError::Invalid {
            key: "max_concurrency",
            message: "must be at least 1".into(),
        });
    }
    let rate_per_s = r.float("rate_per_s")?.unwrap_or(10.0);
    if !(rate_per_s.is_finite() && rate_per_s >= 0.0) {
        return Err(ConfigError::Invalid {
            key: "rate_per_s",
            message: "must be a non-negative number (0 disables the limit)".into(),
        });
    }
    Ok(RunConfig {
        osm_path: r.string("osm_path")?.ok_or(ConfigError::Missing { key: "osm_path" })?.into(),
        out_dir: r.string("out_dir")?.ok_or(ConfigError::Missing { key: "out_dir" })?.into(),
        city,
        classes: r.classes("classes")?.unwrap_or_else(HighwayClass::major),
        target_m,
        sample_n: narrow("sample_n", r.unsigned("sample_n")?.unwrap_or(1000))?,
        seed: r.unsigned("seed")?.unwrap_or(42),
        base_url: r.string("base_url")?.unwrap_or_else(|| DEFAULT_BASE_URL.into()),
        max_concurrency,
        rate_per_s,
        retries: narrow("retries", r.unsigned("retries")?.unwrap_or(3))?,
        backoff_ms: r.unsigned("backoff_ms")?.unwrap_or(200),
        api_key: r.string("api_key")?.or(env_api_key).filter(|k| !k.is_empty()),
        download_images: r.boolean("download_images")?.unwrap_or(true),
        fixed_clock: r.string("fixed_clock")?,
        stratify_by_class: r.boolean("stratify_by_class")?.unwrap_or(false),
        skip_degenerate: r.boolean("skip_degenerate")?.unwrap_or(false),
    })
}
