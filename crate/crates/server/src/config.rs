//! Service configuration: a TOML file, then `FRAMECUE_*` environment
//! overrides.

use std::path::{Path, PathBuf};

use framecue::providers::{ProviderConfig, ProviderMode, DEFAULT_MAX_REPAIRS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    /// Directory `POST /projects` loads bundles from.
    pub bundle_dir: PathBuf,
    pub provider: ProviderConfig,
    /// Command jobs running at once.
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// When set, every request except `/health` needs
    /// `Authorization: Bearer <token>`.
    #[serde(default)]
    pub auth_token: Option<String>,
}

fn default_bind() -> String {
    DEFAULT_BIND.into()
}

fn default_workers() -> usize {
    4
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid value for {key}: {value:?}")]
    Env { key: String, value: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ServerConfig {
    /// Config for offline use with everything defaulted.
    pub fn offline(bundle_dir: impl Into<PathBuf>) -> Self {
        ServerConfig {
            bind: default_bind(),
            bundle_dir: bundle_dir.into(),
            provider: ProviderConfig {
                mode: ProviderMode::Oracle,
                replay_cache: None,
                live: None,
                embedding_dim: 64,
                max_repairs: DEFAULT_MAX_REPAIRS,
            },
            workers: default_workers(),
            auth_token: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    /// Reads `path`, applies the process environment and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.into(),
            source,
        })?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            if cfg.bundle_dir.is_relative() {
                cfg.bundle_dir = dir.join(&cfg.bundle_dir);
            }
            if let Some(c) = &cfg.provider.replay_cache {
                if c.is_relative() {
                    cfg.provider.replay_cache = Some(dir.join(c));
                }
            }
        }
        cfg.apply_env(std::env::vars())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overrides from `FRAMECUE_BIND`, `FRAMECUE_BUNDLE_DIR`,
    /// `FRAMECUE_PROVIDER_MODE`, `FRAMECUE_REPLAY_CACHE`,
    /// `FRAMECUE_WORKERS` and `FRAMECUE_AUTH_TOKEN`.
    pub fn apply_env(
        &mut self,
        vars: impl IntoIterator<Item = (String, String)>,
    ) -> Result<(), ConfigError> {
        for (key, value) in vars {
            let bad = || ConfigError::Env {
                key: key.clone(),
                value: value.clone(),
            };
            match key.as_str() {
                "FRAMECUE_BIND" => self.bind = value.clone(),
                "FRAMECUE_BUNDLE_DIR" => self.bundle_dir = PathBuf::from(&value),
                "FRAMECUE_PROVIDER_MODE" => {
                    self.provider.mode =
                        serde_json::from_value(serde_json::Value::String(value.clone()))
                            .map_err(|_| bad())?
                }
                "FRAMECUE_REPLAY_CACHE" => self.provider.replay_cache = Some(PathBuf::from(&value)),
                "FRAMECUE_WORKERS" => self.workers = value.parse().map_err(|_| bad())?,
                "FRAMECUE_AUTH_TOKEN" => {
                    self.auth_token = Some(value.clone()).filter(|v| !v.is_empty())
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.bind.parse::<std::net::SocketAddr>().is_err() {
            return Err(ConfigError::Invalid(format!(
                "bind {:?} is not host:port",
                self.bind
            )));
        }
        if !self.bundle_dir.is_dir() {
            return Err(ConfigError::Invalid(format!(
                "bundle_dir {} is not a directory",
                self.bundle_dir.display()
            )));
        }
        self.provider
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}
