use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use metahint_core::QuotaPolicy;
use metahint_exec::SandboxConfig;
use metahint_genpipe::{PipelineConfig, ProviderConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiConfig {
    #[serde(default = "default_listen")]
    pub listen_address: SocketAddr,
    pub questions_dir: PathBuf,
    pub event_log_path: PathBuf,
    #[serde(default)]
    pub quota: QuotaPolicy,
    #[serde(default)]
    pub provider: ProviderConfig,
    #[serde(default)]
    pub sandbox: SandboxConfig,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    /// Directory of template overrides; built-in templates otherwise.
    #[serde(default)]
    pub templates_dir: Option<PathBuf>,
}

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

impl ApiConfig {
    /// Reads a TOML config. Relative paths are taken relative to the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: ApiConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.questions_dir);
        resolve(&mut config.event_log_path);
        if let Some(script) = config.provider.script.as_mut() {
            resolve(script);
        }
        if let Some(dir) = config.templates_dir.as_mut() {
            resolve(dir);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.provider
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.pipeline.max_candidate_attempts == 0 {
            return Err(ConfigError::Invalid("pipeline.max_candidate_attempts must be positive".into()));
        }
        Ok(())
    }
}
