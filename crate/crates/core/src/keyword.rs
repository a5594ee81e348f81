use serde::{Deserialize, Serialize};

use crate::hierarchy::{HierarchyPath, NodeLevel, StyleHierarchy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeywordOrigin {
    HierarchySuggested,
    UserOriginated,
}

/// A prompt keyword. `hierarchy_path` is present iff the keyword was taken
/// unchanged from the session's current hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keyword {
    pub text: String,
    pub origin: KeywordOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchy_path: Option<HierarchyPath>,
}

impl Keyword {
    pub fn user(text: impl Into<String>) -> Self {
        Keyword { text: text.into(), origin: KeywordOrigin::UserOriginated, hierarchy_path: None }
    }

    pub fn suggested(text: impl Into<String>, path: HierarchyPath) -> Self {
        Keyword {
            text: text.into(),
            origin: KeywordOrigin::HierarchySuggested,
            hierarchy_path: Some(path),
        }
    }

    /// Weight by hierarchy depth; user keywords weigh like an element.
    pub fn depth_weight(&self) -> f64 {
        match (self.origin, self.hierarchy_path.as_ref().and_then(|p| p.level())) {
            (KeywordOrigin::HierarchySuggested, Some(NodeLevel::Style)) => 1.0,
            (KeywordOrigin::HierarchySuggested, Some(NodeLevel::SubStyle)) => 2.0,
            (KeywordOrigin::HierarchySuggested, Some(NodeLevel::Element)) => 3.0,
            (KeywordOrigin::HierarchySuggested, Some(NodeLevel::SubElement)) => 4.0,
            _ => 3.0,
        }
    }

    /// True when a suggested keyword's path still names this text.
    pub fn resolves_in(&self, hierarchy: &StyleHierarchy) -> bool {
        match &self.hierarchy_path {
            Some(p) => hierarchy.resolve(p).map(|n| n.text == self.text).unwrap_or(false),
            None => self.origin == KeywordOrigin::UserOriginated,
        }
    }
}

/// A keyword as sent by a client: bare text, or text plus the hierarchy path
/// it was picked from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KeywordInput {
    Text(String),
    WithPath {
        text: String,
        #[serde(default, alias = "path")]
        hierarchy_path: Option<HierarchyPath>,
    },
}

impl KeywordInput {
    pub fn text(&self) -> &str {
        match self {
            KeywordInput::Text(t) => t,
            KeywordInput::WithPath { text, .. } => text,
        }
    }

    pub fn path(&self) -> Option<&HierarchyPath> {
        match self {
            KeywordInput::Text(_) => None,
            KeywordInput::WithPath { hierarchy_path, .. } => hierarchy_path.as_ref(),
        }
    }
}

impl From<&Keyword> for KeywordInput {
    fn from(k: &Keyword) -> Self {
        KeywordInput::WithPath { text: k.text.clone(), hierarchy_path: k.hierarchy_path.clone() }
    }
}

impl From<&str> for KeywordInput {
    fn from(s: &str) -> Self {
        KeywordInput::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedPrompt {
    pub keywords: Vec<Keyword>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_text: Option<String>,
    pub specificity: f64,
    pub revision: u32,
}

impl RefinedPrompt {
    pub fn new(keywords: Vec<Keyword>, free_text: Option<String>, revision: u32) -> Self {
        let mut prompt = RefinedPrompt { keywords, free_text, specificity: 0.0, revision };
        prompt.specificity = specificity_score(&prompt);
        prompt
    }

    pub fn keyword_texts(&self) -> Vec<&str> {
        self.keywords.iter().map(|k| k.text.as_str()).collect()
    }
}

/// Diagnostic specificity: depth weights of the keywords plus half a point
/// per whitespace-separated free-text token.
pub fn specificity_score(prompt: &RefinedPrompt) -> f64 {
    let keywords: f64 = prompt.keywords.iter().map(Keyword::depth_weight).sum();
    let tokens = prompt.free_text.as_deref().map(|t| t.split_whitespace().count()).unwrap_or(0);
    keywords + 0.5 * tokens as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_style_keyword_scores_one() {
        let p = RefinedPrompt::new(vec![Keyword::suggested("vintage", HierarchyPath::new([0]))], None, 1);
        assert_eq!(p.specificity, 1.0);
    }

    #[test]
    fn sub_element_plus_user_keyword_scores_seven() {
        let p = RefinedPrompt::new(
            vec![
                Keyword::suggested("breathable mesh", HierarchyPath::new([0, 0, 1, 0])),
                Keyword::user("active skirt"),
            ],
            None,
            1,
        );
        assert_eq!(p.specificity, 7.0);
    }

    #[test]
    fn free_text_tokens_add_half_points() {
        let p = RefinedPrompt::new(
            vec![Keyword::suggested("Summer Breeze Athleisure", HierarchyPath::new([0, 0]))],
            Some("  with   more flair ".into()),
            3,
        );
        assert_eq!(p.specificity, 2.0 + 1.5);
    }

    #[test]
    fn keyword_input_accepts_text_or_object() {
        let v: Vec<KeywordInput> =
            serde_json::from_str(r#"["olive green", {"text": "mesh", "path": [0, 0, 1, 0]}, {"text": "x", "hierarchy_path": null}]"#)
                .unwrap();
        assert_eq!(v[0], KeywordInput::Text("olive green".into()));
        assert_eq!(v[1].path(), Some(&HierarchyPath::new([0, 0, 1, 0])));
        assert_eq!(v[2].path(), None);
    }

    #[test]
    fn keyword_serialization_omits_missing_path() {
        let json = serde_json::to_string(&Keyword::user("active skirt")).unwrap();
        assert_eq!(json, r#"{"text":"active skirt","origin":"UserOriginated"}"#);
    }
}
