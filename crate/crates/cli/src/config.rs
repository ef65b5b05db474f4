//! Flat experiment configuration: top-level `key = value` pairs (TOML syntax)
//! with command-line flags taking precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub profile: Option<String>,
    pub field: Option<String>,
    pub point: Option<Vec<f64>>,
    pub chart: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub nu: Option<Vec<f64>>,
    pub leading: Option<Vec<f64>>,
    pub grid: Option<usize>,
    pub grids: Option<Vec<usize>>,
    pub cap: Option<usize>,
    pub refinements: Option<usize>,
    pub k_max: Option<usize>,
    pub tau: Option<f64>,
    pub kappa_max: Option<f64>,
    pub lambda: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_nonlinearity: Option<f64>,
    pub shift: Option<f64>,
    pub max_iterations: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub method: Option<String>,
    pub scheme: Option<String>,
    pub csv: Option<PathBuf>,
    pub field_json: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Resolved parameters of one run, echoed into the report in key order.
#[derive(Debug, Default)]
pub struct Resolved {
    echo: BTreeMap<String, Value>,
}

impl Resolved {
    /// `flag`, else `file`, else `default`; records the choice.
    pub fn pick<T: Serialize + Clone>(&mut self, key: &str, flag: Option<T>, file: Option<T>, default: T) -> T {
        let v = flag.or(file).unwrap_or(default);
        self.record(key, &v);
        v
    }

    pub fn pick_opt<T: Serialize + Clone>(&mut self, key: &str, flag: Option<T>, file: Option<T>) -> Option<T> {
        let v = flag.or(file);
        if let Some(v) = &v {
            self.record(key, v);
        }
        v
    }

    pub fn require<T: Serialize + Clone>(
        &mut self,
        key: &str,
        flag: Option<T>,
        file: Option<T>,
    ) -> Result<T, CliError> {
        self.pick_opt(key, flag, file)
            .ok_or_else(|| CliError::Config(format!("missing required parameter `{key}`")))
    }

    pub fn record<T: Serialize>(&mut self, key: &str, v: &T) {
        self.echo
            .insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn into_echo(self) -> BTreeMap<String, Value> {
        self.echo
    }
}

pub fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("`{key}` must be positive, got {v}")))
    }
}

pub fn positive_count(key: &str, v: usize) -> Result<usize, CliError> {
    if v > 0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("`{key}` must be positive")))
    }
}

pub fn arity<const N: usize>(key: &str, v: &[f64]) -> Result<[f64; N], CliError> {
    v.try_into()
        .map_err(|_| CliError::Config(format!("`{key}` needs {N} components, got {}", v.len())))
}
