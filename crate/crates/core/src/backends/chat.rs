use std::sync::Arc;

use super::parse::{parse_caption_response, parse_hierarchy_response, parse_keyword_response};
use super::prompts::{build_caption_request, build_extraction_request, build_hierarchy_request};
use super::{ChatBackend, ChatImage, ChatRequest, ElementSuggestions, KeywordLists};
use crate::config::{CaptionShape, HierarchyShape};
use crate::error::BackendError;
use crate::hierarchy::StyleHierarchy;
use crate::session::GenerationArtifact;

/// Builds requests, sends them through a chat backend and parses the answers.
/// A response that fails to parse is retried once.
#[derive(Clone)]
pub struct ChatPipeline {
    backend: Arc<dyn ChatBackend>,
    shape: HierarchyShape,
    caption: CaptionShape,
}

impl ChatPipeline {
    pub fn new(backend: Arc<dyn ChatBackend>, shape: HierarchyShape, caption: CaptionShape) -> Self {
        ChatPipeline { backend, shape, caption }
    }

    pub fn backend_id(&self) -> String {
        self.backend.backend_id()
    }

    pub fn accepts_images(&self) -> bool {
        self.backend.accepts_images()
    }

    async fn ask<T>(
        &self,
        request: &ChatRequest,
        parse: impl Fn(&str) -> Result<T, BackendError>,
    ) -> Result<T, BackendError> {
        let raw = self.backend.complete(request).await?;
        match parse(&raw) {
            Err(BackendError::Parse { reason, .. }) => {
                tracing::warn!(task = ?request.task, %reason, "unparseable chat response, retrying once");
                let raw = self.backend.complete(request).await?;
                parse(&raw)
            }
            other => other,
        }
    }

    pub async fn extract_keywords(
        &self,
        text: &str,
        style_hint: Option<&str>,
        seed: u64,
    ) -> Result<KeywordLists, BackendError> {
        let mut req = build_extraction_request(text, style_hint)?;
        req.seed = Some(seed);
        self.ask(&req, parse_keyword_response).await
    }

    pub async fn generate_hierarchy(
        &self,
        keywords: &KeywordLists,
        seed: u64,
    ) -> Result<(StyleHierarchy, Vec<String>), BackendError> {
        let mut req = build_hierarchy_request(keywords, &self.shape)?;
        req.seed = Some(seed);
        self.ask(&req, parse_hierarchy_response).await
    }

    pub async fn caption(
        &self,
        moodboard: &GenerationArtifact,
        image: Option<ChatImage>,
        style_hint: Option<&str>,
        seed: u64,
    ) -> Result<ElementSuggestions, BackendError> {
        let mut req = build_caption_request(moodboard, &self.caption, image, style_hint)?;
        req.seed = Some(seed);
        let (mut suggestions, _) = self.ask(&req, parse_caption_response).await?;
        suggestions.elements.truncate(self.caption.max_categories);
        for el in &mut suggestions.elements {
            el.sub_elements.truncate(self.caption.max_sub_elements);
        }
        Ok(suggestions)
    }
}
