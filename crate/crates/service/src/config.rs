//! Service configuration: an optional TOML file, then `MMLA_*` environment
//! overrides.
//!
//! ```toml
//! store_root = "/var/lib/mmla"
//! port = 8080
//! window_ms = 30000
//! step_ms = 1000
//! prominence_frac = 0.1
//!
//! [ranges.heart_rate]
//! min = 30.0
//! max = 220.0
//! ```
//!
//! Environment: `MMLA_STORE_ROOT`, `MMLA_PORT`, `MMLA_WINDOW_MS`,
//! `MMLA_STEP_MS`, `MMLA_PROMINENCE_FRAC` and `MMLA_RANGE_<MODALITY>=min,max`
//! (leave `max` empty for no upper bound).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mmla_core::analytics::{AnalyticsParams, ValidRange, ValidRanges};
use mmla_core::ingest::Modality;
use serde::Deserialize;
use thiserror::Error;

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{key}: {message}")]
    Env { key: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub store_root: PathBuf,
    pub port: u16,
    pub params: AnalyticsParams,
    pub ranges: ValidRanges,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            store_root: PathBuf::from("mmla-store"),
            port: DEFAULT_PORT,
            params: AnalyticsParams::default(),
            ranges: ValidRanges::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    store_root: Option<PathBuf>,
    port: Option<u16>,
    window_ms: Option<u64>,
    step_ms: Option<i64>,
    prominence_frac: Option<f64>,
    #[serde(default)]
    ranges: BTreeMap<Modality, ValidRange>,
}

impl Config {
    /// Load from `file` (if given) and the process environment.
    pub fn load(file: Option<&Path>) -> Result<Self, ConfigError> {
        Self::from_sources(file, std::env::vars())
    }

    pub fn from_sources(
        file: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
            cfg.apply_toml(&text).map_err(|message| ConfigError::Parse { path: path.to_path_buf(), message })?;
        }
        for (key, value) in env {
            cfg.apply_env(&key, &value).map_err(|message| ConfigError::Env { key: key.clone(), message })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_toml(&mut self, text: &str) -> Result<(), String> {
        let f: FileConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        if let Some(v) = f.store_root {
            self.store_root = v;
        }
        if let Some(v) = f.port {
            self.port = v;
        }
        if let Some(v) = f.window_ms {
            self.params.window_ms = v;
        }
        if let Some(v) = f.step_ms {
            self.params.step_ms = v;
        }
        if let Some(v) = f.prominence_frac {
            self.params.prominence_frac = v;
        }
        for (m, r) in f.ranges {
            self.ranges.set(m, r);
        }
        Ok(())
    }

    fn apply_env(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.trim().parse().map_err(|e: T::Err| e.to_string())
        }
        match key {
            "MMLA_STORE_ROOT" => self.store_root = PathBuf::from(value),
            "MMLA_PORT" => self.port = num(value)?,
            "MMLA_WINDOW_MS" => self.params.window_ms = num(value)?,
            "MMLA_STEP_MS" => self.params.step_ms = num(value)?,
            "MMLA_PROMINENCE_FRAC" => self.params.prominence_frac = num(value)?,
            _ => {
                if let Some(name) = key.strip_prefix("MMLA_RANGE_") {
                    let modality: Modality = name.to_ascii_lowercase().parse()?;
                    let (lo, hi) = value.split_once(',').ok_or("expected `min,max`")?;
                    let base = ValidRange::default_for(modality);
                    let range = ValidRange {
                        min: num(lo)?,
                        min_exclusive: base.min_exclusive,
                        max: if hi.trim().is_empty() { None } else { Some(num(hi)?) },
                    };
                    self.ranges.set(modality, range);
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.params.step_ms <= 0 {
            return Err(ConfigError::Invalid(format!("step_ms must be > 0, got {}", self.params.step_ms)));
        }
        let f = self.params.prominence_frac;
        if !(f > 0.0 && f <= 1.0) {
            return Err(ConfigError::Invalid(format!("prominence_frac must be in (0, 1], got {f}")));
        }
        for (m, r) in &self.ranges.0 {
            if !r.min.is_finite() || r.max.is_some_and(|hi| hi.is_nan() || hi < r.min) {
                return Err(ConfigError::Invalid(format!("range for {m} is empty or not finite")));
            }
        }
        Ok(())
    }
}
