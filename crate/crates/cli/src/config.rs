//! Run configuration: a TOML file with dotted keys, then command-line overrides
//! applied to the same key paths.

use std::path::{Path, PathBuf};

use pseudobosons::models::{ModelKind, ModelSpec};
use pseudobosons::Tolerances;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("bad override `{0}`: expected KEY=VALUE")]
    Override(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Assumptions,
    Eigen,
    Frames,
    Bosonize,
    Coherent,
    Quadrature,
    Hamiltonian,
    Metric,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Assumptions,
        Check::Eigen,
        Check::Frames,
        Check::Bosonize,
        Check::Coherent,
        Check::Quadrature,
        Check::Hamiltonian,
        Check::Metric,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Assumptions => "assumptions",
            Check::Eigen => "eigen",
            Check::Frames => "frames",
            Check::Bosonize => "bosonize",
            Check::Coherent => "coherent",
            Check::Quadrature => "quadrature",
            Check::Hamiltonian => "hamiltonian",
            Check::Metric => "metric",
        }
    }
}

/// Model parameters without the truncation size, which comes from `dims`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Table")]
pub struct ModelConfig {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub modes: usize,
}

impl TryFrom<Table> for ModelConfig {
    type Error = String;

    fn try_from(mut table: Table) -> Result<Self, String> {
        let modes = match table.remove("modes") {
            None => 1,
            Some(Value::Integer(m)) if m > 0 => m as usize,
            Some(other) => return Err(format!("model.modes must be a positive integer, got {other}")),
        };
        let given: Vec<String> = table.keys().cloned().collect();
        let kind: ModelKind = table.try_into().map_err(|e: toml::de::Error| e.message().to_string())?;
        // Internally tagged enums ignore extra keys; compare against what the variant uses.
        let known = Table::try_from(&kind).map_err(|e| e.to_string())?;
        if let Some(extra) = given.iter().find(|k| !known.contains_key(*k)) {
            return Err(format!("unknown field `{extra}` for model kind `{}`", known["kind"].as_str().unwrap_or("?")));
        }
        Ok(Self { kind, modes })
    }
}

impl ModelConfig {
    pub fn spec(&self, dim: usize, seed: Option<u64>) -> ModelSpec {
        let mut kind = self.kind.clone();
        if let (ModelKind::RieszSeeded { seed: s, .. }, Some(seed)) = (&mut kind, seed) {
            *s = seed;
        }
        ModelSpec { kind, dim, modes: self.modes }
    }
}

fn all_checks() -> Vec<Check> {
    Check::ALL.to_vec()
}

/// Explicit evaluation regions; per-dimension defaults apply when absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Regions {
    pub trust: Option<usize>,
    pub core: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoherentConfig {
    /// `|z|` values probed; every mode gets the same amplitude.
    pub radii: Vec<f64>,
    /// Equally spaced phases per radius.
    pub angles: usize,
}

impl Default for CoherentConfig {
    fn default() -> Self {
        Self { radii: vec![0.35, 0.7], angles: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub r_max: f64,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { r_max: 6.0, radial_nodes: 64, angular_nodes: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, csv: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub dims: Vec<usize>,
    #[serde(default = "all_checks")]
    pub checks: Vec<Check>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub regions: Regions,
    #[serde(default)]
    pub coherent: CoherentConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Not echoed into reports, so that output location never changes their bytes.
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parse TOML text, apply `overrides` as dotted-key assignments, and validate.
    pub fn from_toml(text: &str, origin: &str, overrides: &[(String, Value)]) -> Result<Self, ConfigError> {
        let parse_err = |e: toml::de::Error| ConfigError::Parse { origin: origin.to_string(), message: e.to_string() };
        let mut table: Table = toml::from_str(text).map_err(parse_err)?;
        for (key, value) in overrides {
            set_path(&mut table, key, value.clone())?;
        }
        let config = match table.try_into::<RunConfig>() {
            Ok(c) => c,
            // Re-parse the file alone for line and column context when it is at fault.
            Err(e) => match toml::from_str::<RunConfig>(text) {
                Err(located) if overrides.is_empty() || !located.message().contains("missing field") => {
                    return Err(parse_err(located))
                }
                _ => {
                    return Err(ConfigError::Parse {
                        origin: format!("{origin} with command-line overrides"),
                        message: e.message().to_string(),
                    })
                }
            },
        };
        let mut config = config;
        config.normalize();
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self, ConfigError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.to_path_buf(), source })?;
                Self::from_toml(&text, &p.display().to_string(), overrides)
            }
            None => Self::from_toml("", "command line", overrides),
        }
    }

    /// Checks in canonical order, each once.
    fn normalize(&mut self) {
        self.checks.sort();
        self.checks.dedup();
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.dims.is_empty() {
            return bad("dims must not be empty".into());
        }
        if !self.dims.windows(2).all(|w| w[0] < w[1]) {
            return bad(format!("dims must be strictly increasing, got {:?}", self.dims));
        }
        let tol = serde_json::to_value(self.tolerances).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for (key, value) in tol.as_object().into_iter().flatten() {
            match value.as_f64() {
                Some(v) if v > 0.0 && v.is_finite() => {}
                _ => return bad(format!("tolerance {key} must be positive and finite, got {value}")),
            }
        }
        for &dim in &self.dims {
            self.model.spec(dim, self.seed).validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
            for (name, region) in [("trust", self.regions.trust), ("core", self.regions.core)] {
                if let Some(r) = region {
                    if r == 0 || r >= dim {
                        return bad(format!("regions.{name} = {r} must lie in 1..{dim} for dim {dim}"));
                    }
                }
            }
        }
        if self.coherent.angles == 0 || self.coherent.radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return bad("coherent probes need at least one angle and non-negative finite radii".into());
        }
        let q = &self.quadrature;
        if q.radial_nodes == 0 || q.angular_nodes == 0 || !(q.r_max > 0.0 && q.r_max.is_finite()) {
            return bad("quadrature needs positive node counts and a positive radius".into());
        }
        Ok(())
    }
}

/// Parse a value as TOML, falling back to a bare string.
pub fn parse_value(raw: &str) -> Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<Table>(&wrapped) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Split `KEY=VALUE` and parse the value.
pub fn parse_assignment(raw: &str) -> Result<(String, Value), ConfigError> {
    let (key, value) = raw.split_once('=').ok_or_else(|| ConfigError::Override(raw.to_string()))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ConfigError::Override(raw.to_string()));
    }
    Ok((key.to_string(), parse_value(value.trim())))
}

/// Assign `value` at a dotted key path, creating intermediate tables.
pub fn set_path(table: &mut Table, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().ok_or_else(|| ConfigError::Override(key.to_string()))?;
    let mut cursor = table;
    for part in parts {
        let entry = cursor.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cursor = match entry {
            Value::Table(t) => t,
            other => return Err(ConfigError::Invalid(format!("`{part}` in `{key}` is a {}, not a table", other.type_str()))),
        };
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}
