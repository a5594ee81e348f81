//! Service configuration. Values come from a TOML file, then environment
//! variables, then command-line flags, each layer overriding the previous.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clay_core::backends::remote::DEFAULT_CONCURRENCY;
use clay_core::backends::{BackendConfig, BackendKind, ChatBackend, ImageBackend, MockChat, MockImage};
use clay_core::backends::{RemoteChat, RemoteImage};
use clay_core::{BlobStore, Clock, Engine, LogicalClock, SystemClock, Taxonomy, WorkflowConfig};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    System,
    /// Deterministic timestamps, one second apart.
    Logical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: String,
    pub data_dir: PathBuf,
    /// Taxonomy document; the bundled one when absent.
    pub taxonomy: Option<PathBuf>,
    /// Bound on concurrent remote backend calls.
    pub concurrency: usize,
    pub clock: ClockKind,
    pub workflow: WorkflowConfig,
    pub chat: BackendConfig,
    pub image: BackendConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("clay-data"),
            taxonomy: None,
            concurrency: DEFAULT_CONCURRENCY,
            clock: ClockKind::System,
            workflow: WorkflowConfig::default(),
            chat: BackendConfig::mock(),
            image: BackendConfig::mock(),
        }
    }
}

/// One layer of optional settings, filled from the environment or flags.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct Overrides {
    /// Listen address, e.g. 127.0.0.1:8080.
    #[arg(long)]
    pub bind: Option<String>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    /// `mock` or `remote`; applies to both chat and image backends.
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub chat_url: Option<String>,
    #[arg(long)]
    pub image_url: Option<String>,
    #[arg(long)]
    pub chat_model: Option<String>,
    #[arg(long)]
    pub image_model: Option<String>,
    /// Name of the environment variable holding the API credential.
    #[arg(long)]
    pub credential_env: Option<String>,
    #[arg(long, value_enum)]
    pub clock: Option<ClockKind>,
}

pub const ENV_PREFIX: &str = "CLAY_";

impl Overrides {
    /// Reads `CLAY_BIND`, `CLAY_DATA_DIR`, `CLAY_TAXONOMY`, `CLAY_BACKEND`,
    /// `CLAY_CHAT_URL`, `CLAY_IMAGE_URL`, `CLAY_CHAT_MODEL`,
    /// `CLAY_IMAGE_MODEL`, `CLAY_CREDENTIAL_ENV` and `CLAY_CLOCK`.
    pub fn from_env(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, CliError> {
        let get = |k: &str| lookup(&format!("{ENV_PREFIX}{k}")).filter(|v| !v.trim().is_empty());
        let clock = match get("CLOCK").as_deref() {
            None => None,
            Some("system") => Some(ClockKind::System),
            Some("logical") => Some(ClockKind::Logical),
            Some(other) => return Err(CliError::Config(format!("CLAY_CLOCK: unknown clock {other:?}"))),
        };
        Ok(Overrides {
            bind: get("BIND"),
            data_dir: get("DATA_DIR").map(PathBuf::from),
            taxonomy: get("TAXONOMY").map(PathBuf::from),
            backend: get("BACKEND"),
            chat_url: get("CHAT_URL"),
            image_url: get("IMAGE_URL"),
            chat_model: get("CHAT_MODEL"),
            image_model: get("IMAGE_MODEL"),
            credential_env: get("CREDENTIAL_ENV"),
            clock,
        })
    }

    pub fn apply(&self, cfg: &mut ServiceConfig) -> Result<(), CliError> {
        if let Some(v) = &self.bind {
            cfg.bind = v.clone();
        }
        if let Some(v) = &self.data_dir {
            cfg.data_dir = v.clone();
        }
        if let Some(v) = &self.taxonomy {
            cfg.taxonomy = Some(v.clone());
        }
        if let Some(v) = self.clock {
            cfg.clock = v;
        }
        match self.backend.as_deref() {
            None => {}
            Some("mock") => {
                cfg.chat.kind = BackendKind::Mock;
                cfg.image.kind = BackendKind::Mock;
            }
            Some("remote") => {
                cfg.chat.kind = BackendKind::RemoteChat;
                cfg.image.kind = BackendKind::RemoteImage;
            }
            Some(other) => return Err(CliError::Config(format!("unknown backend {other:?}; use mock or remote"))),
        }
        let set = |slot: &mut Option<String>, v: &Option<String>| {
            if let Some(v) = v {
                *slot = Some(v.clone());
            }
        };
        set(&mut cfg.chat.base_url, &self.chat_url);
        set(&mut cfg.image.base_url, &self.image_url);
        set(&mut cfg.chat.model_name, &self.chat_model);
        set(&mut cfg.image.model_name, &self.image_model);
        set(&mut cfg.chat.credential_env_var, &self.credential_env);
        set(&mut cfg.image.credential_env_var, &self.credential_env);
        Ok(())
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// File (or defaults), then environment, then flags.
    pub fn resolve(
        file: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
        flags: &Overrides,
    ) -> Result<Self, CliError> {
        let mut cfg = match file {
            Some(p) => Self::load_file(p)?,
            None => Self::default(),
        };
        Overrides::from_env(env)?.apply(&mut cfg)?;
        flags.apply(&mut cfg)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.workflow.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.chat.validate().map_err(|e| CliError::Config(format!("chat backend: {e}")))?;
        self.image.validate().map_err(|e| CliError::Config(format!("image backend: {e}")))?;
        if !matches!(self.chat.kind, BackendKind::Mock | BackendKind::RemoteChat) {
            return Err(CliError::Config(format!("chat backend cannot be {:?}", self.chat.kind)));
        }
        if !matches!(self.image.kind, BackendKind::Mock | BackendKind::RemoteImage) {
            return Err(CliError::Config(format!("image backend cannot be {:?}", self.image.kind)));
        }
        if self.concurrency == 0 {
            return Err(CliError::Config("concurrency must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load_taxonomy(&self) -> Result<Taxonomy, CliError> {
        match &self.taxonomy {
            Some(p) => Taxonomy::load(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))),
            None => Ok(Taxonomy::bundled()),
        }
    }

    /// Builds the engine, failing early on a missing credential variable.
    pub fn build_engine(&self, blobs: Arc<dyn BlobStore>) -> Result<Engine, CliError> {
        let taxonomy = Arc::new(self.load_taxonomy()?);
        let limiter = Arc::new(Semaphore::new(self.concurrency));
        let backend_err = |e: clay_core::BackendError| CliError::Config(e.to_string());
        let chat: Arc<dyn ChatBackend> = match self.chat.kind {
            BackendKind::RemoteChat => Arc::new(RemoteChat::from_config(&self.chat, limiter.clone()).map_err(backend_err)?),
            _ => Arc::new(MockChat::new(
                taxonomy.clone(),
                self.workflow.hierarchy.clone(),
                self.workflow.caption.clone(),
            )),
        };
        let images: Arc<dyn ImageBackend> = match self.image.kind {
            BackendKind::RemoteImage => Arc::new(RemoteImage::from_config(&self.image, limiter).map_err(backend_err)?),
            _ => Arc::new(MockImage),
        };
        let clock: Arc<dyn Clock> = match self.clock {
            ClockKind::System => Arc::new(SystemClock),
            ClockKind::Logical => Arc::new(LogicalClock::default()),
        };
        Ok(Engine::new(chat, images, blobs, taxonomy, self.workflow.clone(), clock))
    }
}
