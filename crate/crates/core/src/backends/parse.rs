//! Strict parsers for chat responses. They never panic: anything that is
//! not the requested JSON shape becomes a parse error carrying the raw text.

use serde::de::DeserializeOwned;

use super::{ElementSuggestion, ElementSuggestions, KeywordLists};
use crate::error::BackendError;
use crate::hierarchy::StyleHierarchy;

/// Strips one surrounding markdown code fence, which chat models often add.
fn unfence(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else { return t };
    let Some(body_start) = rest.find('\n') else { return t };
    let body = &rest[body_start + 1..];
    body.trim_end().strip_suffix("```").map(str::trim).unwrap_or(t)
}

fn parse_json<T: DeserializeOwned>(raw: &str) -> Result<T, BackendError> {
    let body = unfence(raw);
    if body.is_empty() {
        return Err(BackendError::parse("empty response", raw));
    }
    serde_json::from_str(body).map_err(|e| BackendError::parse(e.to_string(), raw))
}

fn clean_list(items: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for item in items {
        let t = item.trim();
        if !t.is_empty() && !out.iter().any(|o| o == t) {
            out.push(t.to_string());
        }
    }
    out
}

pub fn parse_keyword_response(raw: &str) -> Result<KeywordLists, BackendError> {
    let parsed: KeywordLists = parse_json(raw)?;
    let lists = KeywordLists { styles: clean_list(parsed.styles), moods: clean_list(parsed.moods) };
    if lists.is_empty() {
        return Err(BackendError::Structural("no styles or moods extracted".into()));
    }
    Ok(lists)
}

/// Parses and normalizes a hierarchy; the warnings list dropped duplicates.
pub fn parse_hierarchy_response(raw: &str) -> Result<(StyleHierarchy, Vec<String>), BackendError> {
    let mut h: StyleHierarchy = parse_json(raw)?;
    let warnings = h.normalize();
    h.validate().map_err(|v| {
        BackendError::Structural(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "))
    })?;
    Ok((h, warnings))
}

pub fn parse_caption_response(raw: &str) -> Result<(ElementSuggestions, Vec<String>), BackendError> {
    let parsed: ElementSuggestions = parse_json(raw)?;
    let mut warnings = Vec::new();
    let mut elements: Vec<ElementSuggestion> = Vec::new();
    for el in parsed.elements {
        let category = el.category.trim().to_string();
        if category.is_empty() {
            return Err(BackendError::Structural("element with empty category".into()));
        }
        let subs = clean_list(el.sub_elements);
        if subs.is_empty() {
            return Err(BackendError::Structural(format!("element {category:?} has no sub-elements")));
        }
        if elements.iter().any(|e| e.category == category) {
            warnings.push(format!("duplicate element {category:?}"));
            continue;
        }
        elements.push(ElementSuggestion { category, sub_elements: subs });
    }
    if elements.is_empty() {
        return Err(BackendError::Structural("no fashion elements in caption".into()));
    }
    Ok((ElementSuggestions { elements }, warnings))
}
