use std::path::{Path, PathBuf};
use std::time::Duration;

use cascadekit::cascade::{PricingTable, Role, DEFAULT_DELTA};
use serde::{Deserialize, Serialize};

use crate::backend::{backend_from_endpoint, BackendError};
use crate::gateway::{BackendHandle, Backends};

/// Environment variable that replaces the config path given on the command line.
pub const CONFIG_ENV: &str = "CASCADEKIT_CONFIG";

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("config file {0} must end in .toml or .json")]
    UnknownFormat(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("backend {role}: {source}")]
    Backend {
        role: Role,
        #[source]
        source: BackendError,
    },
    #[error("no config path: pass one or set {CONFIG_ENV}")]
    NoPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub id: String,
    /// Locator understood by [`backend_from_endpoint`].
    pub endpoint: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    1
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendsConfig {
    pub small: BackendConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub large: Option<BackendConfig>,
}

/// Prices inline, or a path to a pricing JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PricingSource {
    File(PathBuf),
    Inline(PricingTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouterConfig {
    pub tau: f64,
    /// Kept with the threshold so recalibration has it at hand; routing uses only `tau`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub backends: BackendsConfig,
    pub pricing: PricingSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub listen: Option<String>,
}

/// `CASCADEKIT_CONFIG` when set, else `given`.
pub fn resolve_config_path(given: Option<&Path>) -> Result<PathBuf, ConfigError> {
    match std::env::var_os(CONFIG_ENV) {
        Some(p) if !p.is_empty() => Ok(PathBuf::from(p)),
        _ => given.map(Path::to_path_buf).ok_or(ConfigError::NoPath),
    }
}

/// Checks a threshold for use at runtime.
pub fn validate_tau(tau: f64) -> Result<(), ConfigError> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("tau {tau} must be a finite number >= 0")))
    }
}

impl RouterConfig {
    /// Reads TOML or JSON by extension. Relative `pricing` and `log_path`
    /// entries are resolved against the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        let parse_err = |message: String| ConfigError::Parse { path: shown.clone(), message };
        let mut config: RouterConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
            Some("json") => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
            _ => return Err(ConfigError::UnknownFormat(shown)),
        };
        let base = path.parent().unwrap_or(Path::new(""));
        if let PricingSource::File(p) = &mut config.pricing {
            *p = base.join(&*p);
        }
        if let Some(p) = &mut config.log_path {
            *p = base.join(&*p);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_tau(self.tau)?;
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(ConfigError::Invalid(format!("delta {} must be a finite number >= 0", self.delta)));
        }
        for b in std::iter::once(&self.backends.small).chain(&self.backends.large) {
            if b.timeout_ms == 0 {
                return Err(ConfigError::Invalid(format!("backend {}: timeout_ms must be > 0", b.id)));
            }
        }
        Ok(())
    }

    pub fn pricing_table(&self) -> Result<PricingTable, ConfigError> {
        let table = match &self.pricing {
            PricingSource::Inline(t) => PricingTable::from_roles(t.roles().clone()),
            PricingSource::File(p) => PricingTable::load(p),
        }
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let needed = std::iter::once(Role::Small).chain(self.backends.large.as_ref().map(|_| Role::Large));
        for role in needed {
            table.price(role).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(table)
    }

    /// Instantiates the configured backends.
    pub fn backends(&self) -> Result<Backends, ConfigError> {
        let handle = |role: Role, b: &BackendConfig| -> Result<BackendHandle, ConfigError> {
            let backend = backend_from_endpoint(&b.id, &b.endpoint).map_err(|source| ConfigError::Backend { role, source })?;
            Ok(BackendHandle::new(backend, Duration::from_millis(b.timeout_ms), b.max_retries))
        };
        Ok(Backends {
            small: handle(Role::Small, &self.backends.small)?,
            large: self.backends.large.as_ref().map(|b| handle(Role::Large, b)).transpose()?,
            pricing: self.pricing_table()?,
        })
    }
}
