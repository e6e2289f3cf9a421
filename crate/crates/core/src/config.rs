//! Run configuration: TOML schema, validation, backend construction, and
//! the standard output-directory layout.

use crate::backend::{Backend, BackendMap, MockBackend, OpenAiChatBackend};
use crate::conditions::ConditionId;
use crate::error::{Error, Result};
use crate::runner::TrialSchedule;
use crate::store::hex_prefix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Mock,
    OpenaiChat,
}

/// One model entry. Secrets arrive only through the named environment
/// variable, never through the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub id: String,
    pub kind: BackendKind,
    /// Mock script path (kind = mock).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<String>,
    /// Chat-completions endpoint (kind = openai_chat).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key (kind = openai_chat).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// Wire-protocol model name; defaults to `id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

fn default_seed() -> u64 {
    42
}

fn default_max_in_flight() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub global_seed: u64,
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
    /// Task bank path; a CLI `--bank` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bank: Option<String>,
    pub out_dir: String,
    /// Conditions to include; defaults to all five.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditions: Option<Vec<ConditionId>>,
    #[serde(default = "TrialSchedule::default")]
    pub schedule: TrialSchedule,
    pub models: Vec<ModelConfig>,
}

impl RunConfig {
    pub fn conditions(&self) -> Vec<ConditionId> {
        self.conditions.clone().unwrap_or_else(|| ConditionId::ALL.to_vec())
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.models.iter().map(|m| m.id.clone()).collect()
    }
}

/// A parsed config plus the hash of its file bytes, which every emitted
/// artifact embeds.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub config_hash: String,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    /// Resolve a config-relative path against the config file's directory.
    pub fn resolve(&self, path: &str) -> PathBuf {
        let p = Path::new(path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn paths(&self) -> RunPaths {
        RunPaths::new(self.resolve(&self.config.out_dir))
    }
}

/// Standard output layout under one run directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub out_dir: PathBuf,
    pub store: PathBuf,
    pub scored_dir: PathBuf,
    pub analysis_dir: PathBuf,
    pub report_dir: PathBuf,
}

impl RunPaths {
    pub fn new(out_dir: PathBuf) -> RunPaths {
        RunPaths {
            store: out_dir.join("store.jsonl"),
            scored_dir: out_dir.join("scored"),
            analysis_dir: out_dir.join("analysis"),
            report_dir: out_dir.join("report"),
            out_dir,
        }
    }
}

pub fn config_hash_of(bytes: &[u8]) -> String {
    hex_prefix(&Sha256::digest(bytes), 16)
}

/// Load and validate a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|e| Error::Config(format!("{}: not UTF-8: {e}", path.display())))?;
    let config: RunConfig = toml::from_str(&text).map_err(|source| Error::Toml {
        path: path.display().to_string(),
        source,
    })?;
    if config.schema_version != crate::SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported config schema_version {}",
            config.schema_version
        )));
    }
    if config.models.is_empty() {
        return Err(Error::Config("config declares no models".into()));
    }
    let loaded = LoadedConfig {
        config,
        config_hash: config_hash_of(&bytes),
        base_dir: path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    // Referenced paths must exist at load time.
    if let Some(bank) = &loaded.config.bank {
        let p = loaded.resolve(bank);
        if !p.exists() {
            return Err(Error::Config(format!(
                "bank path does not exist: {}",
                p.display()
            )));
        }
    }
    for model in &loaded.config.models {
        match model.kind {
            BackendKind::Mock => {
                if let Some(script) = &model.script {
                    let p = loaded.resolve(script);
                    if !p.exists() {
                        return Err(Error::Config(format!(
                            "mock script for {} does not exist: {}",
                            model.id,
                            p.display()
                        )));
                    }
                }
            }
            BackendKind::OpenaiChat => {
                if model.endpoint.is_none() {
                    return Err(Error::Config(format!(
                        "model {} (openai_chat) needs an endpoint",
                        model.id
                    )));
                }
            }
        }
    }
    Ok(loaded)
}

/// Build one backend per configured model. `mock_override` swaps every
/// model for a scripted mock, for offline end-to-end runs.
pub fn build_backends(
    loaded: &LoadedConfig,
    mock_override: Option<&Path>,
) -> Result<BackendMap> {
    let mut backends = BackendMap::new();
    for model in &loaded.config.models {
        let backend: Arc<dyn Backend> = if let Some(script) = mock_override {
            Arc::new(MockBackend::load(script)?)
        } else {
            match model.kind {
                BackendKind::Mock => {
                    let script = model.script.as_ref().ok_or_else(|| {
                        Error::Config(format!("model {} (mock) needs a script path", model.id))
                    })?;
                    Arc::new(MockBackend::load(loaded.resolve(script))?)
                }
                BackendKind::OpenaiChat => {
                    let endpoint = model.endpoint.clone().expect("validated at load");
                    let api_key = model
                        .api_key_env
                        .as_ref()
                        .and_then(|name| std::env::var(name).ok());
                    let wire_model = model.model.clone().unwrap_or_else(|| model.id.clone());
                    Arc::new(OpenAiChatBackend::new(endpoint, wire_model, api_key)?)
                }
            }
        };
        if backends.insert(model.id.clone(), backend).is_some() {
            return Err(Error::Config(format!("duplicate model id {}", model.id)));
        }
    }
    Ok(backends)
}
