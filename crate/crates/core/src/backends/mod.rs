//! Ports for the generative capabilities and their adapters.
//!
//! Keyword extraction, hierarchy generation and captioning all go through a
//! [`ChatBackend`]; image synthesis goes through an [`ImageBackend`]. The mock
//! adapters answer in the same wire shapes as the remote ones, so the
//! request builders and response parsers are exercised offline too.

pub mod chat;
pub mod image;
pub mod mock;
pub mod parse;
pub mod prompts;
pub mod remote;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use crate::blob::{BlobStore, ContentRef};
use crate::error::{BackendError, WorkflowError};

pub use chat::ChatPipeline;
pub use mock::{mock_generate_hierarchy, MockChat, MockImage};
pub use parse::{parse_caption_response, parse_hierarchy_response, parse_keyword_response};
pub use prompts::{build_caption_request, build_extraction_request, build_hierarchy_request};
pub use remote::{RemoteChat, RemoteImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatTask {
    ExtractKeywords,
    GenerateHierarchy,
    Caption,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub input: String,
    pub output: String,
}

/// Inline image for vision-capable chat endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatImage {
    pub mime: String,
    pub data_base64: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub task: ChatTask,
    pub instruction: String,
    /// Few-shot pairs; only keyword extraction carries any.
    pub exemplars: Vec<Exemplar>,
    pub user_content: String,
    pub response_schema_hint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Assigned style, used when the text names none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_hint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ChatImage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KeywordLists {
    #[serde(default)]
    pub styles: Vec<String>,
    #[serde(default)]
    pub moods: Vec<String>,
}

impl KeywordLists {
    pub fn is_empty(&self) -> bool {
        self.styles.is_empty() && self.moods.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementSuggestion {
    pub category: String,
    pub sub_elements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ElementSuggestions {
    pub elements: Vec<ElementSuggestion>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TileKind {
    Garment,
    Object,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSpec {
    pub label: String,
    pub kind: TileKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRequest {
    pub prompt_text: String,
    pub count: u32,
    pub size_hint: (u32, u32),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Collage layout for moodboards. Remote backends only see `prompt_text`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiles: Option<Vec<TileSpec>>,
}

impl ImageRequest {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.prompt_text.trim().is_empty() {
            return Err(BackendError::InvalidRequest("prompt_text is empty".into()));
        }
        if self.count == 0 {
            return Err(BackendError::InvalidRequest("count must be at least 1".into()));
        }
        if self.size_hint.0 == 0 || self.size_hint.1 == 0 {
            return Err(BackendError::InvalidRequest("size_hint must be positive".into()));
        }
        if matches!(&self.tiles, Some(t) if t.is_empty()) {
            return Err(BackendError::InvalidRequest("tile layout is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendKind {
    RemoteChat,
    RemoteImage,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub base_url: Option<String>,
    #[serde(default)]
    pub model_name: Option<String>,
    #[serde(default)]
    pub credential_env_var: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Initial backoff; doubles on every retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Send moodboard pixels to the chat endpoint when captioning.
    #[serde(default)]
    pub vision: bool,
}

fn default_timeout() -> u64 {
    60
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}

impl BackendConfig {
    pub fn mock() -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            base_url: None,
            model_name: None,
            credential_env_var: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            vision: false,
        }
    }

    pub fn remote(kind: BackendKind, base_url: &str, credential_env_var: &str) -> Self {
        BackendConfig {
            kind,
            base_url: Some(base_url.into()),
            credential_env_var: Some(credential_env_var.into()),
            ..Self::mock()
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.kind != BackendKind::Mock {
            if self.base_url.as_deref().map(str::trim).unwrap_or("").is_empty() {
                return Err(BackendError::Configuration(format!("{:?} requires base_url", self.kind)));
            }
            if self.credential_env_var.as_deref().unwrap_or("").is_empty() {
                return Err(BackendError::Configuration(format!(
                    "{:?} requires credential_env_var",
                    self.kind
                )));
            }
        }
        if self.timeout_secs == 0 {
            return Err(BackendError::Configuration("timeout must be positive".into()));
        }
        Ok(())
    }
}

#[async_trait]
pub trait ChatBackend: Send + Sync {
    fn backend_id(&self) -> String;
    /// Whether captioning may send moodboard pixels instead of provenance text.
    fn accepts_images(&self) -> bool {
        false
    }
    async fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;
}

#[async_trait]
pub trait ImageBackend: Send + Sync {
    fn backend_id(&self) -> String;
    /// Returns `count` encoded images.
    async fn generate(&self, request: &ImageRequest) -> Result<Vec<Vec<u8>>, BackendError>;
}

/// Runs an image request and stores the results, returning their content refs.
pub async fn synthesize_images(
    backend: &dyn ImageBackend,
    store: &dyn BlobStore,
    request: &ImageRequest,
) -> Result<Vec<ContentRef>, WorkflowError> {
    request.validate()?;
    let images = backend.generate(request).await?;
    if images.len() != request.count as usize {
        return Err(BackendError::Structural(format!(
            "asked for {} images, got {}",
            request.count,
            images.len()
        ))
        .into());
    }
    images
        .iter()
        .map(|bytes| {
            store.put(bytes).map_err(|e| WorkflowError::Store(e.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn remote_config_requires_url_and_credential() {
        let mut c = BackendConfig::remote(BackendKind::RemoteChat, "http://x", "KEY");
        c.validate().unwrap();
        c.base_url = None;
        assert!(matches!(c.validate(), Err(BackendError::Configuration(_))));
        let mut c = BackendConfig::remote(BackendKind::RemoteImage, "http://x", "");
        assert!(c.validate().is_err());
        c.kind = BackendKind::Mock;
        c.validate().unwrap();
    }

    #[test]
    fn image_request_validation() {
        let ok = ImageRequest {
            prompt_text: "p".into(),
            count: 1,
            size_hint: (8, 8),
            seed: None,
            tiles: None,
        };
        ok.validate().unwrap();
        assert!(ImageRequest { count: 0, ..ok.clone() }.validate().is_err());
        assert!(ImageRequest { prompt_text: " ".into(), ..ok.clone() }.validate().is_err());
        assert!(ImageRequest { tiles: Some(vec![]), ..ok }.validate().is_err());
    }
}
