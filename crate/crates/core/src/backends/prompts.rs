//! Chat request construction. Keyword extraction is few-shot; hierarchy
//! generation and captioning are zero-shot.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use super::{ChatImage, ChatRequest, ChatTask, Exemplar, KeywordLists};
use crate::config::{CaptionShape, HierarchyShape};
use crate::error::BackendError;
use crate::session::{ArtifactKind, GenerationArtifact, KeywordLineage};

const EXEMPLARS_JSON: &str = include_str!("../../data/extraction_exemplars.json");

pub const KEYWORD_SCHEMA: &str =
    r#"Respond with JSON only: {"styles": [string, ...], "moods": [string, ...]}"#;

pub const HIERARCHY_SCHEMA: &str = r#"Respond with JSON only: {"styles": [{"name": string, "moods": [string], "sub_styles": [{"name": string, "elements": [{"category": string, "sub_elements": [string]}]}]}]}"#;

pub const CAPTION_SCHEMA: &str =
    r#"Respond with JSON only: {"elements": [{"category": string, "sub_elements": [string, ...]}]}"#;

/// The bundled few-shot exemplars for keyword extraction.
pub fn extraction_exemplars() -> &'static [Exemplar] {
    static CELL: OnceLock<Vec<Exemplar>> = OnceLock::new();
    CELL.get_or_init(|| serde_json::from_str(EXEMPLARS_JSON).expect("bundled exemplars parse"))
}

pub fn build_extraction_request(
    free_text: &str,
    style_hint: Option<&str>,
) -> Result<ChatRequest, BackendError> {
    if free_text.trim().is_empty() {
        return Err(BackendError::InvalidRequest("vague prompt is empty".into()));
    }
    let mut instruction = String::from(
        "You help fashion designers. Extract the fashion styles and the moods mentioned \
         in the designer's request. Use short lowercase keywords.",
    );
    if let Some(h) = style_hint {
        instruction.push_str(&format!(
            " The designer was assigned the style \"{h}\"; return it as the style when the request names none."
        ));
    }
    Ok(ChatRequest {
        task: ChatTask::ExtractKeywords,
        instruction,
        exemplars: extraction_exemplars().to_vec(),
        user_content: free_text.to_string(),
        response_schema_hint: KEYWORD_SCHEMA.into(),
        seed: None,
        style_hint: style_hint.map(String::from),
        image: None,
    })
}

pub fn build_hierarchy_request(
    keywords: &KeywordLists,
    shape: &HierarchyShape,
) -> Result<ChatRequest, BackendError> {
    if keywords.is_empty() {
        return Err(BackendError::InvalidRequest("no styles or moods to expand".into()));
    }
    let list = |v: &[String]| if v.is_empty() { "(none)".to_string() } else { v.join(", ") };
    let instruction = format!(
        "You help fashion designers explore a vague idea. Styles: {styles}. Moods: {moods}. \
         Build a four-level hierarchy: style -> sub-style -> fashion element -> sub-element. \
         For every style give {subs} sub-styles; for every sub-style give the fashion element \
         categories {cats}; for every element give {leaves} concrete sub-elements. \
         Sibling names must be unique and non-empty.",
        styles = list(&keywords.styles),
        moods = list(&keywords.moods),
        subs = shape.sub_styles,
        cats = shape.categories.join(", "),
        leaves = shape.sub_elements,
    );
    Ok(ChatRequest {
        task: ChatTask::GenerateHierarchy,
        instruction,
        exemplars: Vec::new(),
        user_content: serde_json::to_string(keywords).expect("keywords serialize"),
        response_schema_hint: HIERARCHY_SCHEMA.into(),
        seed: None,
        style_hint: None,
        image: None,
    })
}

/// What the captioner is told about a moodboard when it cannot see pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoodboardDescription {
    pub artifact_id: String,
    pub prompt: String,
    pub provenance: Vec<KeywordLineage>,
}

pub fn build_caption_request(
    artifact: &GenerationArtifact,
    shape: &CaptionShape,
    image: Option<ChatImage>,
    style_hint: Option<&str>,
) -> Result<ChatRequest, BackendError> {
    if artifact.kind != ArtifactKind::MoodboardImage {
        return Err(BackendError::InvalidRequest(format!(
            "artifact {} is a {:?}, not a moodboard",
            artifact.id, artifact.kind
        )));
    }
    let description = MoodboardDescription {
        artifact_id: artifact.id.0.clone(),
        prompt: artifact.prompt_text.clone(),
        provenance: artifact.provenance.clone(),
    };
    let instruction = format!(
        "Caption this fashion moodboard. List fashion elements a designer could use in a \
         garment design: at most {} element categories, each with at most {} concrete \
         sub-elements.",
        shape.max_categories, shape.max_sub_elements
    );
    Ok(ChatRequest {
        task: ChatTask::Caption,
        instruction,
        exemplars: Vec::new(),
        user_content: serde_json::to_string(&description).expect("description serializes"),
        response_schema_hint: CAPTION_SCHEMA.into(),
        seed: None,
        style_hint: style_hint.map(String::from),
        image,
    })
}
