//! Offline backends. Every output is a pure function of the request and the
//! taxonomy; nothing here touches the network.

use async_trait::async_trait;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use super::image::render_collage;
use super::prompts::MoodboardDescription;
use super::{
    ChatBackend, ChatRequest, ChatTask, ElementSuggestion, ElementSuggestions, ImageBackend,
    ImageRequest, KeywordLists,
};
use crate::blob::hash_u64;
use crate::config::{CaptionShape, HierarchyShape};
use crate::error::BackendError;
use crate::hierarchy::{ElementNode, StyleHierarchy, StyleNode, SubStyleNode};
use crate::taxonomy::{Taxonomy, TaxonomyStyle};

fn normalize(s: &str) -> String {
    s.to_lowercase().replace(['-', '_'], " ")
}

/// Byte offset of `needle` in `hay` as a whole-word match.
fn word_position(hay: &str, needle: &str) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let is_word = |c: Option<char>| c.map(|c| c.is_alphanumeric()).unwrap_or(false);
    let mut from = 0;
    while let Some(i) = hay[from..].find(needle) {
        let start = from + i;
        let end = start + needle.len();
        if !is_word(hay[..start].chars().next_back()) && !is_word(hay[end..].chars().next()) {
            return Some(start);
        }
        from = start + hay[start..].chars().next().map(char::len_utf8).unwrap_or(1);
    }
    None
}

/// Styles (or their sub-styles) and moods named in the text, in order of
/// appearance. Falls back to the hint when no style is named.
pub fn mock_extract(text: &str, taxonomy: &Taxonomy, style_hint: Option<&str>) -> KeywordLists {
    let hay = normalize(text);
    let mut found: Vec<(usize, String)> = Vec::new();
    for style in taxonomy.styles() {
        let mut best = word_position(&hay, &normalize(&style.name));
        for sub in &style.sub_styles {
            if let Some(p) = word_position(&hay, &normalize(&sub.name)) {
                best = Some(best.map_or(p, |b| b.min(p)));
            }
        }
        if let Some(p) = best {
            found.push((p, style.name.clone()));
        }
    }
    found.sort();
    let mut styles: Vec<String> = found.into_iter().map(|(_, s)| s).collect();

    let mut moods: Vec<(usize, String)> = taxonomy
        .mood_vocabulary()
        .into_iter()
        .filter_map(|m| word_position(&hay, &normalize(m)).map(|p| (p, m.to_string())))
        .collect();
    moods.sort();

    if styles.is_empty() {
        if let Some(h) = style_hint {
            styles.push(taxonomy.match_style(h).map(|s| s.name.clone()).unwrap_or_else(|| h.to_string()));
        }
    }
    KeywordLists { styles, moods: moods.into_iter().map(|(_, m)| m).collect() }
}

fn sorted_sample(rng: &mut ChaCha8Rng, len: usize, amount: usize) -> Vec<usize> {
    let mut idx = sample(rng, len, amount.min(len)).into_vec();
    idx.sort_unstable();
    idx
}

fn resolve_styles<'a>(keywords: &KeywordLists, taxonomy: &'a Taxonomy) -> Vec<&'a TaxonomyStyle> {
    let mut out: Vec<&TaxonomyStyle> = Vec::new();
    let mut push = |s: &'a TaxonomyStyle| {
        if !out.iter().any(|o| o.name == s.name) {
            out.push(s);
        }
    };
    for k in &keywords.styles {
        if let Some(s) = taxonomy.match_style(k).or_else(|| taxonomy.style_of_sub_style(k)) {
            push(s);
        }
    }
    if keywords.styles.is_empty() {
        for mood in &keywords.moods {
            let key = normalize(mood);
            if let Some(s) = taxonomy.styles().iter().find(|s| s.moods.iter().any(|m| normalize(m) == key)) {
                push(s);
            }
        }
    }
    out
}

/// Seeded sampling of a hierarchy from the taxonomy at the configured
/// cardinalities. Identical keywords, taxonomy and seed give identical trees.
pub fn mock_generate_hierarchy(
    keywords: &KeywordLists,
    taxonomy: &Taxonomy,
    seed: u64,
    shape: &HierarchyShape,
) -> Result<StyleHierarchy, BackendError> {
    let styles = resolve_styles(keywords, taxonomy);
    if styles.is_empty() {
        let mut requested = keywords.styles.clone();
        requested.extend(keywords.moods.iter().cloned());
        return Err(BackendError::UnknownStyle { requested, known: taxonomy.style_names() });
    }
    let keyword_json = serde_json::to_string(keywords).expect("keywords serialize");
    let mut rng = ChaCha8Rng::seed_from_u64(hash_u64(&[
        &seed.to_le_bytes(),
        keyword_json.as_bytes(),
        taxonomy.digest().as_bytes(),
    ]));

    let wanted: Vec<String> = keywords.moods.iter().map(|m| normalize(m)).collect();
    let mut out = Vec::new();
    for style in styles {
        let mut moods: Vec<String> =
            style.moods.iter().filter(|m| wanted.contains(&normalize(m))).cloned().collect();
        if moods.is_empty() {
            moods = style.moods.iter().take(3).cloned().collect();
        }
        let mut sub_styles = Vec::new();
        for si in sorted_sample(&mut rng, style.sub_styles.len(), shape.sub_styles) {
            let sub = &style.sub_styles[si];
            let mut chosen: Vec<&ElementNode> = shape
                .categories
                .iter()
                .filter_map(|c| sub.elements.iter().find(|e| normalize(&e.category) == normalize(c)))
                .collect();
            if chosen.is_empty() {
                chosen = sub.elements.iter().take(shape.categories.len()).collect();
            }
            let elements = chosen
                .into_iter()
                .map(|el| ElementNode {
                    category: el.category.clone(),
                    sub_elements: sorted_sample(&mut rng, el.sub_elements.len(), shape.sub_elements)
                        .into_iter()
                        .map(|i| el.sub_elements[i].clone())
                        .collect(),
                })
                .collect();
            sub_styles.push(SubStyleNode { name: sub.name.clone(), elements });
        }
        out.push(StyleNode { name: style.name.clone(), moods, sub_styles });
    }
    Ok(StyleHierarchy { styles: out })
}

fn add_suggestion(elements: &mut Vec<ElementSuggestion>, category: &str, item: &str) {
    match elements.iter_mut().find(|e| e.category == category) {
        Some(e) => {
            if !e.sub_elements.iter().any(|s| s == item) {
                e.sub_elements.push(item.to_string());
            }
        }
        None => elements.push(ElementSuggestion {
            category: category.to_string(),
            sub_elements: vec![item.to_string()],
        }),
    }
}

/// Caption from recorded provenance: sub-elements the moodboard was built
/// from, then the owning style's design elements, merged by category.
pub fn mock_caption(
    description: &MoodboardDescription,
    taxonomy: &Taxonomy,
    style_hint: Option<&str>,
    shape: &CaptionShape,
) -> ElementSuggestions {
    let mut elements: Vec<ElementSuggestion> = Vec::new();
    for lineage in &description.provenance {
        if let [_, _, category, leaf] = lineage.path_names.as_slice() {
            add_suggestion(&mut elements, category, leaf);
        }
    }
    let style = description
        .provenance
        .iter()
        .find_map(|l| l.path_names.first())
        .and_then(|s| taxonomy.match_style(s))
        .or_else(|| style_hint.and_then(|h| taxonomy.match_style(h)));
    if let Some(style) = style {
        for el in &style.design_elements {
            for item in &el.sub_elements {
                add_suggestion(&mut elements, &el.category, item);
            }
        }
    }
    if elements.is_empty() {
        for lineage in &description.provenance {
            add_suggestion(&mut elements, "motif", &lineage.text);
        }
    }
    if elements.is_empty() {
        add_suggestion(&mut elements, "motif", &description.prompt);
    }
    elements.truncate(shape.max_categories);
    for e in &mut elements {
        e.sub_elements.truncate(shape.max_sub_elements);
    }
    ElementSuggestions { elements }
}

/// Chat backend answering from the taxonomy in the same JSON shapes a
/// remote model is asked for.
pub struct MockChat {
    taxonomy: Arc<Taxonomy>,
    shape: HierarchyShape,
    caption: CaptionShape,
}

impl MockChat {
    pub fn new(taxonomy: Arc<Taxonomy>, shape: HierarchyShape, caption: CaptionShape) -> Self {
        MockChat { taxonomy, shape, caption }
    }
}

#[async_trait]
impl ChatBackend for MockChat {
    fn backend_id(&self) -> String {
        format!("mock-chat@{}", &self.taxonomy.digest()[..12])
    }

    async fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let json = match request.task {
            ChatTask::ExtractKeywords => serde_json::to_string(&mock_extract(
                &request.user_content,
                &self.taxonomy,
                request.style_hint.as_deref(),
            )),
            ChatTask::GenerateHierarchy => {
                let keywords: KeywordLists = serde_json::from_str(&request.user_content)
                    .map_err(|e| BackendError::InvalidRequest(format!("hierarchy request content: {e}")))?;
                let h = mock_generate_hierarchy(
                    &keywords,
                    &self.taxonomy,
                    request.seed.unwrap_or(0),
                    &self.shape,
                )?;
                serde_json::to_string(&h)
            }
            ChatTask::Caption => {
                let d: MoodboardDescription = serde_json::from_str(&request.user_content)
                    .map_err(|e| BackendError::InvalidRequest(format!("caption request content: {e}")))?;
                serde_json::to_string(&mock_caption(
                    &d,
                    &self.taxonomy,
                    request.style_hint.as_deref(),
                    &self.caption,
                ))
            }
        };
        Ok(json.expect("mock output serializes"))
    }
}

/// Image backend drawing labelled collages; see [`render_collage`].
#[derive(Debug, Default, Clone)]
pub struct MockImage;

#[async_trait]
impl ImageBackend for MockImage {
    fn backend_id(&self) -> String {
        "mock-image".into()
    }

    async fn generate(&self, request: &ImageRequest) -> Result<Vec<Vec<u8>>, BackendError> {
        request.validate()?;
        (0..request.count).map(|v| render_collage(request, v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::KeywordLineage;

    fn tax() -> Taxonomy {
        Taxonomy::bundled()
    }

    fn kw(styles: &[&str], moods: &[&str]) -> KeywordLists {
        KeywordLists {
            styles: styles.iter().map(|s| s.to_string()).collect(),
            moods: moods.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn extraction_finds_styles_and_moods() {
        let k = mock_extract(
            "create a moodboard for an athleisure casual look suitable for a resort",
            &tax(),
            None,
        );
        assert_eq!(k.styles, ["athleisure"]);
        assert_eq!(k.moods, ["casual", "resort"]);
        let k = mock_extract("Hip-Hop meets vintage", &tax(), None);
        assert_eq!(k.styles, ["hip-hop", "vintage"]);
        let k = mock_extract("something soft", &tax(), Some("chic"));
        assert_eq!(k.styles, ["chic"]);
        assert_eq!(k.moods, ["soft"]);
    }

    #[test]
    fn hierarchy_is_deterministic_and_shaped() {
        let t = tax();
        let shape = HierarchyShape::default();
        let a = mock_generate_hierarchy(&kw(&["vintage"], &[]), &t, 42, &shape).unwrap();
        let b = mock_generate_hierarchy(&kw(&["vintage"], &[]), &t, 42, &shape).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        let subs = a.sub_style_names();
        assert!(subs.contains(&"vintage granny") && subs.contains(&"romantic vintage"));
        for s in &a.styles[0].sub_styles {
            assert_eq!(s.elements.len(), 4);
            assert!(s.elements.iter().all(|e| e.sub_elements.len() == 3));
        }
    }

    #[test]
    fn smaller_shapes_sample_subsets() {
        let t = tax();
        let shape = HierarchyShape { sub_styles: 2, categories: vec!["color".into()], sub_elements: 1 };
        let h = mock_generate_hierarchy(&kw(&["chic"], &[]), &t, 1, &shape).unwrap();
        assert_eq!(h.styles[0].sub_styles.len(), 2);
        assert_eq!(h.styles[0].sub_styles[0].elements.len(), 1);
        let differs = (0..20).any(|s| mock_generate_hierarchy(&kw(&["chic"], &[]), &t, s, &shape).unwrap() != h);
        assert!(differs);
    }

    #[test]
    fn unknown_style_lists_known() {
        match mock_generate_hierarchy(&kw(&["zzz-unknown"], &[]), &tax(), 1, &HierarchyShape::default()) {
            Err(BackendError::UnknownStyle { requested, known }) => {
                assert_eq!(requested, ["zzz-unknown"]);
                assert!(known.contains(&"vintage".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mood_only_keywords_pick_a_style() {
        let h = mock_generate_hierarchy(&kw(&[], &["nostalgic"]), &tax(), 1, &HierarchyShape::default())
            .unwrap();
        assert_eq!(h.styles[0].name, "vintage");
    }

    #[test]
    fn caption_uses_provenance_then_style_elements() {
        let d = MoodboardDescription {
            artifact_id: "art-000".into(),
            prompt: "p".into(),
            provenance: vec![
                KeywordLineage {
                    text: "breathable mesh".into(),
                    path_names: ["athleisure", "Summer Breeze Athleisure", "fabric", "breathable mesh"]
                        .map(String::from)
                        .to_vec(),
                },
                KeywordLineage { text: "active skirt".into(), path_names: vec![] },
            ],
        };
        let s = mock_caption(&d, &tax(), None, &CaptionShape::default());
        assert_eq!(s.elements[0].category, "fabric");
        assert_eq!(s.elements[0].sub_elements, ["breathable mesh"]);
        let all: Vec<&str> =
            s.elements.iter().flat_map(|e| e.sub_elements.iter().map(String::as_str)).collect();
        assert!(all.contains(&"drawstring waist") && all.contains(&"thin straps"));
    }
}
