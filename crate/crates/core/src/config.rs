//! Runtime configuration: an optional TOML file overlaid by environment
//! variables.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::remote::{RemoteBackend, RemoteConfig, ENV_AGENT_TOKEN, ENV_AGENT_URL};
use crate::agents::rubric::{Rubric, RubricBackend};
use crate::agents::{AgentBackend, AgentError};
use crate::engine::{EngineError, WeightVector, DEFAULT_MAX_ROUNDS};
use crate::host::{default_hosts, hosts_from_toml, HostContext, HostError};

pub const ENV_PORT: &str = "DELIBERATE_PORT";
pub const ENV_STORE: &str = "DELIBERATE_STORE";
pub const ENV_API_TOKEN: &str = "DELIBERATE_API_TOKEN";
pub const ENV_WEIGHTS: &str = "DELIBERATE_WEIGHTS";
pub const ENV_K: &str = "DELIBERATE_K";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid value for {key}: {detail}")]
    Value { key: String, detail: String },
    #[error(transparent)]
    Hosts(#[from] HostError),
    #[error(transparent)]
    Backend(#[from] AgentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Rubric,
    Remote,
}

impl fmt::Display for BackendChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rubric => "rubric",
            Self::Remote => "remote",
        })
    }
}

impl FromStr for BackendChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rubric" => Ok(Self::Rubric),
            "remote" => Ok(Self::Remote),
            other => Err(format!("unknown backend `{other}`; expected rubric or remote")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    pub url: Option<String>,
    #[serde(skip_serializing)]
    pub token: Option<String>,
    pub timeout_ms: u64,
    pub retries: u32,
    pub max_in_flight: usize,
    pub remote_validator: bool,
}

impl Default for AgentSection {
    fn default() -> Self {
        let base = RemoteConfig::new("");
        Self {
            url: None,
            token: None,
            timeout_ms: base.timeout_ms,
            retries: base.retries,
            max_in_flight: base.max_in_flight,
            remote_validator: base.remote_validator,
        }
    }
}

impl AgentSection {
    pub fn remote_config(&self) -> Result<RemoteConfig, ConfigError> {
        let url = self.url.clone().ok_or_else(|| ConfigError::Value {
            key: "agent.url".into(),
            detail: format!("required for the remote backend (or set {ENV_AGENT_URL})"),
        })?;
        Ok(RemoteConfig {
            base_url: url,
            token: self.token.clone(),
            timeout_ms: self.timeout_ms,
            retries: self.retries,
            max_in_flight: self.max_in_flight,
            remote_validator: self.remote_validator,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub bind: String,
    pub port: u16,
    pub store: PathBuf,
    /// Host table; the built-in five hosts when absent.
    pub hosts: Option<PathBuf>,
    pub weights: WeightVector,
    /// Validator rounds per chain.
    pub k: u32,
    pub backend: BackendChoice,
    pub agent: AgentSection,
    /// Bearer token required by the HTTP service; open when absent.
    #[serde(skip_serializing)]
    pub api_token: Option<String>,
    /// Concurrently running batch jobs.
    pub max_jobs: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1".into(),
            port: 8080,
            store: PathBuf::from("store"),
            hosts: None,
            weights: WeightVector::default(),
            k: DEFAULT_MAX_ROUNDS,
            backend: BackendChoice::Rubric,
            agent: AgentSection::default(),
            api_token: None,
            max_jobs: 2,
        }
    }
}

fn value_err(key: &str, detail: impl fmt::Display) -> ConfigError {
    ConfigError::Value { key: key.to_string(), detail: detail.to_string() }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// File (if any), then process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.to_path_buf(), source })?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    /// Overlay values from `lookup`; empty strings count as unset.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        let get = |k: &str| lookup(k).filter(|v| !v.trim().is_empty());
        if let Some(v) = get(ENV_PORT) {
            self.port = v.trim().parse().map_err(|e| value_err(ENV_PORT, e))?;
        }
        if let Some(v) = get(ENV_STORE) {
            self.store = PathBuf::from(v);
        }
        if let Some(v) = get(ENV_AGENT_URL) {
            self.agent.url = Some(v);
        }
        if let Some(v) = get(ENV_AGENT_TOKEN) {
            self.agent.token = Some(v);
        }
        if let Some(v) = get(ENV_API_TOKEN) {
            self.api_token = Some(v);
        }
        if let Some(v) = get(ENV_WEIGHTS) {
            self.weights = v.parse().map_err(|e: EngineError| value_err(ENV_WEIGHTS, e))?;
        }
        if let Some(v) = get(ENV_K) {
            self.k = v.trim().parse().map_err(|e| value_err(ENV_K, e))?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.weights.validate().map_err(|e| value_err("weights", e))?;
        if self.k == 0 {
            return Err(value_err("k", "must be at least 1"));
        }
        if self.max_jobs == 0 {
            return Err(value_err("max_jobs", "must be at least 1"));
        }
        Ok(())
    }

    pub fn load_hosts(&self) -> Result<Vec<HostContext>, ConfigError> {
        match &self.hosts {
            None => Ok(default_hosts()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io { path: p.clone(), source })?;
                Ok(hosts_from_toml(&text)?)
            }
        }
    }

    pub fn build_backend(&self) -> Result<Box<dyn AgentBackend>, ConfigError> {
        Ok(match self.backend {
            BackendChoice::Rubric => Box::new(RubricBackend::new(Rubric::default())?),
            BackendChoice::Remote => Box::new(RemoteBackend::http(self.agent.remote_config()?)?),
        })
    }
}
