//! Flat `key = value` configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment until end of line
//! key = value
//! ```
//!
//! Keys are lowercase ASCII letters, digits and underscores. Values run to the
//! end of the line (or to a `#`) with surrounding whitespace trimmed. Lists are
//! comma separated. A key may appear at most once per file; `--set key=value`
//! overrides are applied afterwards in order. Every subcommand has a fixed key
//! schema with documented defaults, and any other key is rejected.
//!
//! A run manifest written by `train-probe` is also accepted as a config file:
//! its embedded `config` object is read as the key-value table.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gradnoise::univariate::Level;

use crate::error::{CliError, Result};

/// One configuration key with its default value and a short description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn key(name: &'static str, default: &'static str, doc: &'static str) -> Key {
    Key { name, default, doc }
}

pub const SANITY_SAS: &[Key] = &[
    key("alphas", "0.2,0.4,0.6,0.8,1.0,1.2,1.4,1.6,1.8,2.0", "stability indices to sweep"),
    key("rows", "1000", "samples per direction (M)"),
    key("dim", "100", "ambient dimension (p)"),
    key("directions", "1000", "random projection directions (k)"),
    key("level", "0.05", "significance level: 0.15, 0.10, 0.05, 0.025 or 0.01"),
    key("seed", "0", "master seed"),
    key("threads", "0", "worker threads, 0 for the rayon default"),
    key("output_dir", "sanity-sas-out", "directory for CSV and SVG output"),
];

pub const TRAIN_PROBE: &[Key] = &[
    key("dataset", "blobs", "blobs or idx"),
    key("blobs_n", "4096", "synthetic training examples"),
    key("blobs_test_n", "0", "extra synthetic examples held out for testing"),
    key("blobs_dim", "20", "synthetic input dimension"),
    key("blobs_classes", "4", "synthetic class count"),
    key("blobs_spread", "1.0", "standard deviation around each class center"),
    key("data_seed", "1", "seed for synthetic data"),
    key("train_images", "", "IDX image file for training"),
    key("train_labels", "", "IDX label file for training"),
    key("test_images", "", "optional IDX image file for testing"),
    key("test_labels", "", "optional IDX label file for testing"),
    key("max_examples", "4096", "keep the first N training examples, 0 for all"),
    key("hidden", "128,128", "hidden layer widths"),
    key("activation", "relu", "relu or tanh"),
    key("batch_size", "256", "minibatch size (b)"),
    key("learning_rate", "0.01", "constant SGD step size"),
    key("iterations", "500", "SGD iterations (T)"),
    key("checkpoint_every", "100", "probe interval in iterations"),
    key("sgn_minibatches", "1000", "probe minibatches per checkpoint (M)"),
    key("directions", "1000", "random projection directions (k)"),
    key("level", "0.05", "significance level: 0.15, 0.10, 0.05, 0.025 or 0.01"),
    key("seed", "0", "master seed for init, batches, probes, directions and baseline"),
    key("full_batch_probe", "false", "probe with the full index set instead of sampled minibatches"),
    key("save_noise", "false", "write sgn_iter{t}.bin for every checkpoint"),
    key("threads", "0", "worker threads, 0 for the rayon default"),
    key("output_dir", "train-probe-out", "directory for all run artifacts"),
];

pub const ESTIMATE_ALPHA: &[Key] = &[
    key("input", "", "SGNMAT01 noise matrix or newline-delimited numbers"),
    key("k1", "0", "block length, 0 for the divisor of n closest to sqrt(n)"),
    key("output", "", "JSON output path, empty for stdout"),
];

pub const TEST_1D: &[Key] = &[
    key("input", "", "newline-delimited numbers"),
    key("level", "0.05", "significance level: 0.15, 0.10, 0.05, 0.025 or 0.01"),
];

/// Fully resolved configuration: every schema key with its final value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    schema: &'static [Key],
    values: BTreeMap<String, String>,
}

/// Parses the key-value grammar into entries in file order.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
        let k = k.trim();
        if k.is_empty() || !k.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_') {
            return Err(CliError::Config(format!("line {}: invalid key `{k}`", lineno + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(CliError::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_manifest(text: &str) -> Result<Vec<(String, String)>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("manifest is not valid JSON: {e}")))?;
    let table = value
        .get("config")
        .and_then(|c| c.as_object())
        .ok_or_else(|| CliError::Config("manifest has no `config` object".into()))?;
    table
        .iter()
        .map(|(k, v)| match v.as_str() {
            Some(s) => Ok((k.clone(), s.to_string())),
            None => Err(CliError::Config(format!("manifest config value for `{k}` is not a string"))),
        })
        .collect()
}

/// Reads a config file in either the key-value grammar or manifest JSON.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    if text.trim_start().starts_with('{') {
        parse_manifest(&text)
    } else {
        parse_kv(&text)
    }
}

/// Parses one `--set key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{s}` is not of the form key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl RunConfig {
    /// Starts from the schema defaults, then applies file entries and overrides.
    pub fn resolve(
        schema: &'static [Key],
        file: &[(String, String)],
        overrides: &[(String, String)],
    ) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            schema.iter().map(|k| (k.name.to_string(), k.default.to_string())).collect();
        for (k, v) in file.iter().chain(overrides) {
            match values.get_mut(k) {
                Some(slot) => *slot = v.clone(),
                None => {
                    let known: Vec<&str> = schema.iter().map(|k| k.name).collect();
                    return Err(CliError::Config(format!("unknown key `{k}` (known keys: {})", known.join(", "))));
                }
            }
        }
        Ok(Self { schema, values })
    }

    pub fn defaults(schema: &'static [Key]) -> Self {
        Self::resolve(schema, &[], &[]).expect("schema defaults resolve")
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Resolved config in the key-value grammar, keys in schema order.
    pub fn to_kv_text(&self) -> String {
        let mut out = String::new();
        for k in self.schema {
            out.push_str(&format!("# {}\n{} = {}\n", k.doc, k.name, self.values[k.name]));
        }
        out
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("key `{key}` not in schema"))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.str(key);
        raw.parse().map_err(|e| CliError::Config(format!("`{key}`: cannot parse `{raw}`: {e}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parse(key)?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn positive(&self, key: &str) -> Result<usize> {
        let v: usize = self.parse(key)?;
        if v == 0 {
            return Err(CliError::Config(format!("`{key}` must be at least 1")));
        }
        Ok(v)
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.str(key) {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            other => Err(CliError::Config(format!("`{key}`: expected true or false, got `{other}`"))),
        }
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.str(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|item| {
                let item = item.trim();
                item.parse().map_err(|e| CliError::Config(format!("`{key}`: cannot parse `{item}`: {e}")))
            })
            .collect()
    }

    pub fn level(&self, key: &str) -> Result<Level> {
        Level::from_alpha(self.f64(key)?).map_err(CliError::from_core)
    }

    /// Optional path: an empty value means absent.
    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let raw = self.str(key);
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }

    pub fn required_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key).ok_or_else(|| CliError::Config(format!("`{key}` is required")))
    }
}
