//! Four-level keyword tree: style → sub-style → fashion element → sub-element.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::blob::sha256_hex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleHierarchy {
    pub styles: Vec<StyleNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StyleNode {
    pub name: String,
    #[serde(default)]
    pub moods: Vec<String>,
    pub sub_styles: Vec<SubStyleNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubStyleNode {
    pub name: String,
    pub elements: Vec<ElementNode>,
}

/// A fashion element category (color, fabric, silhouette, detail, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementNode {
    pub category: String,
    pub sub_elements: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeLevel {
    Style,
    SubStyle,
    Element,
    SubElement,
}

impl NodeLevel {
    fn from_depth(depth: usize) -> Option<Self> {
        match depth {
            1 => Some(NodeLevel::Style),
            2 => Some(NodeLevel::SubStyle),
            3 => Some(NodeLevel::Element),
            4 => Some(NodeLevel::SubElement),
            _ => None,
        }
    }
}

/// Index path from the root: `[style]`, `[style, sub]`, `[style, sub, element]`
/// or `[style, sub, element, sub_element]`. Serialized as an index array;
/// the `"0/1/2"` string form is accepted on input too.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PathRepr")]
pub struct HierarchyPath(pub Vec<usize>);

#[derive(Deserialize)]
#[serde(untagged)]
enum PathRepr {
    Indices(Vec<usize>),
    Text(String),
}

impl TryFrom<PathRepr> for HierarchyPath {
    type Error = String;

    fn try_from(r: PathRepr) -> Result<Self, Self::Error> {
        match r {
            PathRepr::Indices(v) => Ok(HierarchyPath(v)),
            PathRepr::Text(t) => t.parse(),
        }
    }
}

impl HierarchyPath {
    pub fn new(indices: impl Into<Vec<usize>>) -> Self {
        HierarchyPath(indices.into())
    }

    pub fn level(&self) -> Option<NodeLevel> {
        NodeLevel::from_depth(self.0.len())
    }
}

impl fmt::Display for HierarchyPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("/"))
    }
}

impl FromStr for HierarchyPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let indices = s
            .split('/')
            .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad path segment {p:?}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HierarchyPath(indices))
    }
}

/// A resolved node: its display text, level and the names along the way.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRef {
    pub text: String,
    pub level: NodeLevel,
    /// Names from the style down to (and including) this node.
    pub lineage: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HierarchyViolation {
    NoStyles,
    EmptyName { at: String },
    DuplicateSibling { at: String, name: String },
    NoSubStyles { style: String },
    NoElements { sub_style: String },
    NoSubElements { element: String },
}

impl fmt::Display for HierarchyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HierarchyViolation::NoStyles => write!(f, "hierarchy has no styles"),
            HierarchyViolation::EmptyName { at } => write!(f, "empty node name under {at}"),
            HierarchyViolation::DuplicateSibling { at, name } => {
                write!(f, "duplicate sibling {name:?} under {at}")
            }
            HierarchyViolation::NoSubStyles { style } => {
                write!(f, "style {style:?} has no sub-styles")
            }
            HierarchyViolation::NoElements { sub_style } => {
                write!(f, "sub-style {sub_style:?} has no elements")
            }
            HierarchyViolation::NoSubElements { element } => {
                write!(f, "element {element:?} has no sub-elements")
            }
        }
    }
}

fn check_siblings<'a>(
    names: impl Iterator<Item = &'a str>,
    at: &str,
    out: &mut Vec<HierarchyViolation>,
) {
    let mut seen = HashSet::new();
    for name in names {
        if name.trim().is_empty() {
            out.push(HierarchyViolation::EmptyName { at: at.to_string() });
        } else if !seen.insert(name) {
            out.push(HierarchyViolation::DuplicateSibling {
                at: at.to_string(),
                name: name.to_string(),
            });
        }
    }
}

/// Keeps the first occurrence of each name; returns the dropped names.
fn dedup_by_name<T>(items: &mut Vec<T>, name: impl Fn(&T) -> &str) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut dropped = Vec::new();
    items.retain(|it| {
        let n = name(it).to_string();
        if seen.insert(n.clone()) {
            true
        } else {
            dropped.push(n);
            false
        }
    });
    dropped
}

impl StyleHierarchy {
    pub fn validate(&self) -> Result<(), Vec<HierarchyViolation>> {
        let mut out = Vec::new();
        if self.styles.is_empty() {
            out.push(HierarchyViolation::NoStyles);
        }
        check_siblings(self.styles.iter().map(|s| s.name.as_str()), "root", &mut out);
        for style in &self.styles {
            if style.sub_styles.is_empty() {
                out.push(HierarchyViolation::NoSubStyles { style: style.name.clone() });
            }
            check_siblings(style.sub_styles.iter().map(|s| s.name.as_str()), &style.name, &mut out);
            for sub in &style.sub_styles {
                if sub.elements.is_empty() {
                    out.push(HierarchyViolation::NoElements { sub_style: sub.name.clone() });
                }
                check_siblings(sub.elements.iter().map(|e| e.category.as_str()), &sub.name, &mut out);
                for el in &sub.elements {
                    if el.sub_elements.is_empty() {
                        out.push(HierarchyViolation::NoSubElements {
                            element: format!("{}/{}", sub.name, el.category),
                        });
                    }
                    let at = format!("{}/{}", sub.name, el.category);
                    check_siblings(el.sub_elements.iter().map(String::as_str), &at, &mut out);
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Trims every name and drops later duplicates among siblings.
    /// Returns one warning per dropped node.
    pub fn normalize(&mut self) -> Vec<String> {
        let mut warnings = Vec::new();
        for style in &mut self.styles {
            style.name = style.name.trim().to_string();
            for mood in &mut style.moods {
                *mood = mood.trim().to_string();
            }
            style.moods.retain(|m| !m.is_empty());
            dedup_by_name(&mut style.moods, |m| m.as_str());
            for sub in &mut style.sub_styles {
                sub.name = sub.name.trim().to_string();
                for el in &mut sub.elements {
                    el.category = el.category.trim().to_string();
                    for se in &mut el.sub_elements {
                        *se = se.trim().to_string();
                    }
                    for d in dedup_by_name(&mut el.sub_elements, |s| s.as_str()) {
                        warnings.push(format!("duplicate sub-element {d:?} under {}", el.category));
                    }
                }
                for d in dedup_by_name(&mut sub.elements, |e| e.category.as_str()) {
                    warnings.push(format!("duplicate element {d:?} under {}", sub.name));
                }
            }
            for d in dedup_by_name(&mut style.sub_styles, |s| s.name.as_str()) {
                warnings.push(format!("duplicate sub-style {d:?} under {}", style.name));
            }
        }
        for d in dedup_by_name(&mut self.styles, |s| s.name.as_str()) {
            warnings.push(format!("duplicate style {d:?}"));
        }
        warnings
    }

    pub fn resolve(&self, path: &HierarchyPath) -> Option<NodeRef> {
        let idx = &path.0;
        let level = path.level()?;
        let style = self.styles.get(idx[0])?;
        let mut lineage = vec![style.name.clone()];
        if idx.len() == 1 {
            return Some(NodeRef { text: style.name.clone(), level, lineage });
        }
        let sub = style.sub_styles.get(idx[1])?;
        lineage.push(sub.name.clone());
        if idx.len() == 2 {
            return Some(NodeRef { text: sub.name.clone(), level, lineage });
        }
        let el = sub.elements.get(idx[2])?;
        lineage.push(el.category.clone());
        if idx.len() == 3 {
            return Some(NodeRef { text: el.category.clone(), level, lineage });
        }
        let se = el.sub_elements.get(idx[3])?;
        lineage.push(se.clone());
        Some(NodeRef { text: se.clone(), level, lineage })
    }

    /// Every node path in depth-first order.
    pub fn paths(&self) -> Vec<HierarchyPath> {
        let mut out = Vec::new();
        for (si, style) in self.styles.iter().enumerate() {
            out.push(HierarchyPath(vec![si]));
            for (ui, sub) in style.sub_styles.iter().enumerate() {
                out.push(HierarchyPath(vec![si, ui]));
                for (ei, el) in sub.elements.iter().enumerate() {
                    out.push(HierarchyPath(vec![si, ui, ei]));
                    for xi in 0..el.sub_elements.len() {
                        out.push(HierarchyPath(vec![si, ui, ei, xi]));
                    }
                }
            }
        }
        out
    }

    /// First node (depth-first) whose text equals `text` exactly.
    pub fn find_text(&self, text: &str) -> Option<HierarchyPath> {
        self.paths()
            .into_iter()
            .find(|p| self.resolve(p).map(|n| n.text == text).unwrap_or(false))
    }

    pub fn sub_style_names(&self) -> Vec<&str> {
        self.styles
            .iter()
            .flat_map(|s| s.sub_styles.iter().map(|u| u.name.as_str()))
            .collect()
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("hierarchy serializes")
    }

    pub fn digest(&self) -> String {
        sha256_hex(self.to_canonical_json().as_bytes())
    }
}
