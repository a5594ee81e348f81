//! HTTP adapters for chat-completion and image-generation style services.

use async_trait::async_trait;
use base64::Engine as _;
use serde_json::{json, Value};
use std::sync::Arc;
use std::time::Duration;
use tokio::sync::Semaphore;

use super::{BackendConfig, BackendKind, ChatBackend, ChatRequest, ImageBackend, ImageRequest};
use crate::error::BackendError;

/// Default bound on in-flight remote calls across all adapters sharing it.
pub const DEFAULT_CONCURRENCY: usize = 4;

const EXCERPT_LEN: usize = 300;

fn excerpt(body: &str) -> String {
    body.chars().take(EXCERPT_LEN).collect()
}

/// Shared transport: credential, retry policy and concurrency limit.
#[derive(Clone)]
struct Transport {
    client: reqwest::Client,
    base_url: String,
    model: Option<String>,
    credential: String,
    max_retries: u32,
    backoff: Duration,
    limiter: Arc<Semaphore>,
}

impl Transport {
    fn from_config(
        cfg: &BackendConfig,
        expected: BackendKind,
        limiter: Arc<Semaphore>,
    ) -> Result<Self, BackendError> {
        cfg.validate()?;
        if cfg.kind != expected {
            return Err(BackendError::Configuration(format!(
                "expected a {expected:?} config, got {:?}",
                cfg.kind
            )));
        }
        let var = cfg.credential_env_var.clone().unwrap_or_default();
        let credential = std::env::var(&var).map_err(|_| {
            BackendError::Configuration(format!("credential environment variable {var} is not set"))
        })?;
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| BackendError::Configuration(format!("http client: {e}")))?;
        Ok(Transport {
            client,
            base_url: cfg.base_url.clone().unwrap_or_default().trim_end_matches('/').to_string(),
            model: cfg.model_name.clone(),
            credential,
            max_retries: cfg.max_retries,
            backoff: Duration::from_millis(cfg.backoff_ms),
            limiter,
        })
    }

    /// POSTs JSON, retrying transport failures, 429 and 5xx with exponential backoff.
    async fn post(&self, path: &str, body: &Value) -> Result<Value, BackendError> {
        let _permit = self
            .limiter
            .acquire()
            .await
            .map_err(|_| BackendError::Configuration("request limiter closed".into()))?;
        let url = format!("{}{}", self.base_url, path);
        let attempts = self.max_retries + 1;
        let mut last = BackendError::Transport { status: None, body_excerpt: String::new(), attempts: 0 };
        for attempt in 1..=attempts {
            if attempt > 1 {
                let factor = 1u32 << (attempt - 2).min(16);
                tokio::time::sleep(self.backoff * factor).await;
            }
            let sent = self.client.post(&url).bearer_auth(&self.credential).json(body).send().await;
            let resp = match sent {
                Ok(r) => r,
                Err(e) => {
                    tracing::warn!(%url, attempt, error = %e, "remote call failed");
                    last = BackendError::Transport {
                        status: None,
                        body_excerpt: excerpt(&e.to_string()),
                        attempts: attempt,
                    };
                    continue;
                }
            };
            let status = resp.status();
            let text = resp.text().await.unwrap_or_default();
            if status.is_success() {
                return serde_json::from_str(&text)
                    .map_err(|e| BackendError::parse(format!("response is not JSON: {e}"), &text));
            }
            last = BackendError::Transport {
                status: Some(status.as_u16()),
                body_excerpt: excerpt(&text),
                attempts: attempt,
            };
            let retriable = status.as_u16() == 429 || status.is_server_error();
            tracing::warn!(%url, attempt, status = status.as_u16(), retriable, "remote call rejected");
            if !retriable {
                break;
            }
        }
        Err(last)
    }
}

pub struct RemoteChat {
    transport: Transport,
    vision: bool,
}

impl RemoteChat {
    /// Fails when the credential variable is unset, so misconfiguration
    /// surfaces at startup rather than on the first call.
    pub fn from_config(cfg: &BackendConfig, limiter: Arc<Semaphore>) -> Result<Self, BackendError> {
        Ok(RemoteChat {
            transport: Transport::from_config(cfg, BackendKind::RemoteChat, limiter)?,
            vision: cfg.vision,
        })
    }

    pub fn request_body(&self, request: &ChatRequest) -> Value {
        let mut messages = vec![json!({
            "role": "system",
            "content": format!("{}\n\n{}", request.instruction, request.response_schema_hint),
        })];
        for ex in &request.exemplars {
            messages.push(json!({"role": "user", "content": ex.input}));
            messages.push(json!({"role": "assistant", "content": ex.output}));
        }
        let user = match (&request.image, self.vision) {
            (Some(img), true) => json!([
                {"type": "text", "text": request.user_content},
                {"type": "image_url", "image_url": {"url": format!("data:{};base64,{}", img.mime, img.data_base64)}},
            ]),
            _ => json!(request.user_content),
        };
        messages.push(json!({"role": "user", "content": user}));
        let mut body = json!({"messages": messages});
        if let Some(m) = &self.transport.model {
            body["model"] = json!(m);
        }
        if let Some(s) = request.seed {
            body["seed"] = json!(s);
        }
        body
    }
}

#[async_trait]
impl ChatBackend for RemoteChat {
    fn backend_id(&self) -> String {
        format!("remote-chat:{}", self.transport.model.as_deref().unwrap_or("default"))
    }

    fn accepts_images(&self) -> bool {
        self.vision
    }

    async fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let v = self.transport.post("/chat/completions", &self.request_body(request)).await?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(String::from)
            .ok_or_else(|| BackendError::parse("no choices[0].message.content in response", &v.to_string()))
    }
}

pub struct RemoteImage {
    transport: Transport,
}

impl RemoteImage {
    pub fn from_config(cfg: &BackendConfig, limiter: Arc<Semaphore>) -> Result<Self, BackendError> {
        Ok(RemoteImage { transport: Transport::from_config(cfg, BackendKind::RemoteImage, limiter)? })
    }

    async fn fetch(&self, url: &str) -> Result<Vec<u8>, BackendError> {
        let transport_err = |status: Option<u16>, body: String| BackendError::Transport {
            status,
            body_excerpt: excerpt(&body),
            attempts: 1,
        };
        let resp = self
            .transport
            .client
            .get(url)
            .send()
            .await
            .map_err(|e| transport_err(None, e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().await.unwrap_or_default();
            return Err(transport_err(Some(status.as_u16()), body));
        }
        Ok(resp.bytes().await.map_err(|e| transport_err(None, e.to_string()))?.to_vec())
    }
}

#[async_trait]
impl ImageBackend for RemoteImage {
    fn backend_id(&self) -> String {
        format!("remote-image:{}", self.transport.model.as_deref().unwrap_or("default"))
    }

    async fn generate(&self, request: &ImageRequest) -> Result<Vec<Vec<u8>>, BackendError> {
        request.validate()?;
        let mut body = json!({
            "prompt": request.prompt_text,
            "n": request.count,
            "size": format!("{}x{}", request.size_hint.0, request.size_hint.1),
        });
        if let Some(m) = &self.transport.model {
            body["model"] = json!(m);
        }
        let v = self.transport.post("/images/generations", &body).await?;
        let data = v
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| BackendError::parse("no data array in image response", &v.to_string()))?;
        let mut out = Vec::with_capacity(data.len());
        for item in data {
            if let Some(b64) = item.get("b64_json").and_then(Value::as_str) {
                let bytes = base64::engine::general_purpose::STANDARD
                    .decode(b64)
                    .map_err(|e| BackendError::parse(format!("bad base64 image: {e}"), b64))?;
                out.push(bytes);
            } else if let Some(url) = item.get("url").and_then(Value::as_str) {
                out.push(self.fetch(url).await?);
            } else {
                return Err(BackendError::parse("image entry has neither b64_json nor url", &item.to_string()));
            }
        }
        Ok(out)
    }
}
