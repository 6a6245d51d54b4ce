use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use toml::Value;

use crate::experiments::{self, Experiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Bool,
    Str,
    FloatList,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Float => "float",
            Kind::Int => "integer",
            Kind::Bool => "bool",
            Kind::Str => "string",
            Kind::FloatList => "float list",
        })
    }
}

/// One accepted key of an experiment. `default: None` marks it required.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub kind: Kind,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const fn key(name: &'static str, kind: Kind, default: Option<&'static str>, help: &'static str) -> Key {
    Key {
        name,
        kind,
        default,
        help,
    }
}

/// Keys shared by every experiment.
pub const COMMON_KEYS: &[Key] = &[
    key("experiment", Kind::Str, None, "experiment name"),
    key("output_dir", Kind::Str, Some("\"out\""), "directory for CSV and manifest files"),
    key(
        "convergence_tol",
        Kind::Float,
        Some("1e-6"),
        "relative agreement required between the base and the enlarged run",
    ),
];

/// A validated, fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: &'static Experiment,
    pub output_dir: PathBuf,
    pub convergence_tol: f64,
    values: BTreeMap<String, Value>,
}

fn parse_literal(key: &str, text: &str) -> Result<Value> {
    let doc = format!("v = {text}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => Ok(t.remove("v").expect("parsed table has the key")),
        // bare words are taken as strings so `--set experiment=lz` works
        Err(_) if !text.is_empty() && text.chars().all(|c| c.is_ascii_alphanumeric() || "_-./".contains(c)) => {
            Ok(Value::String(text.to_owned()))
        }
        Err(e) => Err(anyhow!("cannot parse value of `{key}`: {e}")),
    }
}

fn coerce(key: &Key, v: Value) -> Result<Value> {
    let bad = |v: &Value| anyhow!("key `{}` expects a {}, got {}", key.name, key.kind, v.type_str());
    Ok(match (key.kind, v) {
        (Kind::Float, Value::Integer(i)) => Value::Float(i as f64),
        (Kind::Float, v @ Value::Float(_)) => v,
        (Kind::Int, v @ Value::Integer(_)) => v,
        (Kind::Bool, v @ Value::Boolean(_)) => v,
        (Kind::Str, v @ Value::String(_)) => v,
        (Kind::FloatList, Value::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for it in items {
                out.push(match it {
                    Value::Integer(i) => Value::Float(i as f64),
                    Value::Float(x) => Value::Float(x),
                    other => return Err(bad(&other)),
                });
            }
            Value::Array(out)
        }
        (_, v) => return Err(bad(&v)),
    })
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let table: toml::Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;
        let mut raw: BTreeMap<String, Value> = table.into_iter().collect();
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| anyhow!("override `{o}` is not of the form key=value"))?;
            let k = k.trim();
            raw.insert(k.to_owned(), parse_literal(k, v.trim())?);
        }
        Self::from_map(raw)
    }

    pub fn from_map(mut raw: BTreeMap<String, Value>) -> Result<Self> {
        let name = match raw.get("experiment") {
            Some(Value::String(s)) => s.clone(),
            Some(v) => bail!("key `experiment` expects a string, got {}", v.type_str()),
            None => bail!("missing required key `experiment`"),
        };
        let experiment = experiments::find(&name).ok_or_else(|| {
            let names: Vec<_> = experiments::ALL.iter().map(|e| e.name).collect();
            anyhow!("key `experiment`: unknown experiment `{name}` (expected one of {})", names.join(", "))
        })?;
        for k in raw.keys() {
            if !COMMON_KEYS.iter().chain(experiment.keys).any(|key| key.name == k) {
                bail!("unknown key `{k}` for experiment `{name}`");
            }
        }
        let mut values = BTreeMap::new();
        for key in COMMON_KEYS.iter().chain(experiment.keys) {
            let v = match raw.remove(key.name) {
                Some(v) => v,
                None => match key.default {
                    Some(d) => parse_literal(key.name, d)?,
                    None => bail!("missing required key `{}` for experiment `{name}`", key.name),
                },
            };
            values.insert(key.name.to_owned(), coerce(key, v)?);
        }
        let mut cfg = ExperimentConfig {
            experiment,
            output_dir: PathBuf::new(),
            convergence_tol: 0.0,
            values,
        };
        cfg.output_dir = PathBuf::from(cfg.str("output_dir"));
        cfg.convergence_tol = cfg.positive("convergence_tol")?;
        Ok(cfg)
    }

    fn get(&self, name: &str) -> &Value {
        self.values
            .get(name)
            .unwrap_or_else(|| panic!("key `{name}` is not declared by `{}`", self.experiment.name))
    }

    pub fn f64(&self, name: &str) -> Result<f64> {
        let x = self.get(name).as_float().expect("coerced to float");
        if !x.is_finite() {
            bail!("key `{name}` must be finite, got {x}");
        }
        Ok(x)
    }

    pub fn positive(&self, name: &str) -> Result<f64> {
        let x = self.f64(name)?;
        if x <= 0.0 {
            bail!("key `{name}` must be positive, got {x}");
        }
        Ok(x)
    }

    pub fn non_negative(&self, name: &str) -> Result<f64> {
        let x = self.f64(name)?;
        if x < 0.0 {
            bail!("key `{name}` must be non-negative, got {x}");
        }
        Ok(x)
    }

    /// Integer key restricted to `lo..`.
    pub fn usize_at_least(&self, name: &str, lo: usize) -> Result<usize> {
        let i = self.get(name).as_integer().expect("coerced to integer");
        if i < lo as i64 {
            bail!("key `{name}` must be at least {lo}, got {i}");
        }
        Ok(i as usize)
    }

    pub fn bool(&self, name: &str) -> bool {
        self.get(name).as_bool().expect("coerced to bool")
    }

    pub fn str(&self, name: &str) -> &str {
        self.get(name).as_str().expect("coerced to string")
    }

    /// String key restricted to `choices`.
    pub fn choice(&self, name: &str, choices: &[&'static str]) -> Result<&'static str> {
        let s = self.str(name);
        choices
            .iter()
            .find(|c| **c == s)
            .copied()
            .ok_or_else(|| anyhow!("key `{name}` must be one of {}, got `{s}`", choices.join(", ")))
    }

    pub fn list(&self, name: &str) -> Result<Vec<f64>> {
        let xs: Vec<f64> = self
            .get(name)
            .as_array()
            .expect("coerced to array")
            .iter()
            .map(|v| v.as_float().expect("coerced to float"))
            .collect();
        if xs.is_empty() {
            bail!("key `{name}` must not be empty");
        }
        if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
            bail!("key `{name}` contains a non-finite value {x}");
        }
        Ok(xs)
    }

    /// Evenly spaced grid from the keys `{prefix}_min`, `{prefix}_max`,
    /// `{prefix}_points`.
    pub fn grid(&self, prefix: &str) -> Result<Vec<f64>> {
        let (lo_k, hi_k, n_k) = (format!("{prefix}_min"), format!("{prefix}_max"), format!("{prefix}_points"));
        let lo = self.f64(&lo_k)?;
        let hi = self.f64(&hi_k)?;
        let n = self.usize_at_least(&n_k, 1)?;
        if hi < lo || (n > 1 && hi == lo) {
            bail!("key `{hi_k}` ({hi}) must exceed `{lo_k}` ({lo})");
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
    }

    /// Resolved parameters in key order, for the manifest.
    pub fn to_json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        for (k, v) in &self.values {
            m.insert(k.clone(), toml_to_json(v));
        }
        serde_json::Value::Object(m)
    }
}

fn toml_to_json(v: &Value) -> serde_json::Value {
    match v {
        Value::String(s) => s.clone().into(),
        Value::Integer(i) => (*i).into(),
        Value::Float(x) => (*x).into(),
        Value::Boolean(b) => (*b).into(),
        Value::Array(a) => a.iter().map(toml_to_json).collect::<Vec<_>>().into(),
        other => other.to_string().into(),
    }
}
