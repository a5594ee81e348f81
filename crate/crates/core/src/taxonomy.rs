//! Style taxonomy: the full vocabulary that hierarchies are sampled from.
//!
//! The document is JSON shaped like a [`StyleHierarchy`], plus a
//! `design_elements` list per style that the offline captioner draws on when
//! a moodboard enters the design stage.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::blob::sha256_hex;
use crate::hierarchy::{ElementNode, HierarchyViolation, StyleHierarchy, StyleNode, SubStyleNode};

pub const BUNDLED_TAXONOMY: &str = include_str!("../data/taxonomy.json");

/// Style seeds every taxonomy must cover.
pub const STUDY_STYLES: [&str; 6] = ["feminine", "vintage", "sporty", "chic", "hip-hop", "futuristic"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyDocument {
    pub version: String,
    pub styles: Vec<TaxonomyStyle>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyStyle {
    pub name: String,
    #[serde(default)]
    pub moods: Vec<String>,
    pub sub_styles: Vec<SubStyleNode>,
    #[serde(default)]
    pub design_elements: Vec<ElementNode>,
}

#[derive(Debug, thiserror::Error)]
pub enum TaxonomyError {
    #[error("cannot read taxonomy {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("taxonomy is not valid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("taxonomy structure: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Structure(Vec<HierarchyViolation>),
    #[error("taxonomy is missing study styles {0:?}")]
    MissingStyles(Vec<String>),
    #[error("style {style:?} has an empty design element {category:?}")]
    EmptyDesignElement { style: String, category: String },
}

/// A loaded, validated taxonomy with its content digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    doc: TaxonomyDocument,
    digest: String,
}

fn normalize_key(s: &str) -> String {
    s.to_lowercase().replace(['-', '_'], " ")
}

impl Taxonomy {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_TAXONOMY).expect("bundled taxonomy is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, TaxonomyError> {
        let doc: TaxonomyDocument = serde_json::from_str(text)?;
        Self::from_document(doc)
    }

    pub fn load(path: &Path) -> Result<Self, TaxonomyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| TaxonomyError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn from_document(doc: TaxonomyDocument) -> Result<Self, TaxonomyError> {
        doc.as_hierarchy().validate().map_err(TaxonomyError::Structure)?;
        let missing: Vec<String> = STUDY_STYLES
            .iter()
            .filter(|s| !doc.styles.iter().any(|t| normalize_key(&t.name) == normalize_key(s)))
            .map(|s| s.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(TaxonomyError::MissingStyles(missing));
        }
        for style in &doc.styles {
            if let Some(el) = style.design_elements.iter().find(|e| e.sub_elements.is_empty()) {
                return Err(TaxonomyError::EmptyDesignElement {
                    style: style.name.clone(),
                    category: el.category.clone(),
                });
            }
        }
        let digest = sha256_hex(serde_json::to_string(&doc).expect("serializes").as_bytes());
        Ok(Taxonomy { doc, digest })
    }

    pub fn document(&self) -> &TaxonomyDocument {
        &self.doc
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn styles(&self) -> &[TaxonomyStyle] {
        &self.doc.styles
    }

    pub fn style_names(&self) -> Vec<String> {
        self.doc.styles.iter().map(|s| s.name.clone()).collect()
    }

    pub fn style(&self, name: &str) -> Option<&TaxonomyStyle> {
        let key = normalize_key(name);
        self.doc.styles.iter().find(|s| normalize_key(&s.name) == key)
    }

    /// Case-insensitive substring match in either direction (the reverse
    /// direction needs at least three characters).
    pub fn match_style(&self, keyword: &str) -> Option<&TaxonomyStyle> {
        let key = normalize_key(keyword.trim());
        if key.is_empty() {
            return None;
        }
        self.style(keyword).or_else(|| {
            self.doc.styles.iter().find(|s| {
                let name = normalize_key(&s.name);
                key.contains(&name) || (key.len() >= 3 && name.contains(&key))
            })
        })
    }

    /// The style owning a sub-style of the given name.
    pub fn style_of_sub_style(&self, sub_style: &str) -> Option<&TaxonomyStyle> {
        let key = normalize_key(sub_style);
        self.doc
            .styles
            .iter()
            .find(|s| s.sub_styles.iter().any(|u| normalize_key(&u.name) == key))
    }

    /// Every mood across all styles, first occurrence order.
    pub fn mood_vocabulary(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.doc.styles {
            for m in &s.moods {
                if !out.contains(&m.as_str()) {
                    out.push(m);
                }
            }
        }
        out
    }
}

impl TaxonomyDocument {
    pub fn as_hierarchy(&self) -> StyleHierarchy {
        StyleHierarchy {
            styles: self
                .styles
                .iter()
                .map(|s| StyleNode {
                    name: s.name.clone(),
                    moods: s.moods.clone(),
                    sub_styles: s.sub_styles.clone(),
                })
                .collect(),
        }
    }
}
