//! The workflow engine: every operation a designer can perform on a session.
//!
//! Operations validate first, call backends second and mutate the session
//! last, so a failed backend call leaves the session untouched.

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::backends::{
    synthesize_images, ChatBackend, ChatImage, ChatPipeline, ElementSuggestions, ImageBackend,
    ImageRequest, MockChat, MockImage, TileKind, TileSpec,
};
use crate::blob::{hash_u64, sha256_hex, BlobStore};
use crate::clock::{Clock, LogicalClock};
use crate::config::WorkflowConfig;
use crate::error::{BackendError, Result, WorkflowError};
use crate::events::{EventPayload, InteractionEvent, SessionHeader, SessionLog, VagueSource, LOG_FORMAT};
use crate::hierarchy::{ElementNode, HierarchyPath, StyleHierarchy, StyleNode, SubStyleNode};
use crate::keyword::{Keyword, KeywordInput, RefinedPrompt};
use crate::session::{
    interaction_count, is_permitted, ArtifactId, ArtifactKind, CompositionParams, Directive,
    GenerationArtifact, KeywordLineage, Phase, PhaseRecord, PromptSnapshot, Session, SessionId,
    SessionMode, Stage, StageKind,
};
use crate::taxonomy::Taxonomy;

/// Result of a vague prompt: a hierarchy in Clay mode, an image in Baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VagueOutcome {
    Hierarchy(StyleHierarchy),
    Artifact(GenerationArtifact),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionOutcome {
    pub artifact: GenerationArtifact,
    pub composition: CompositionParams,
    /// Set when a bound stopped the directive from taking its full step.
    pub clamped: bool,
}

pub struct Engine {
    chat: ChatPipeline,
    images: Arc<dyn ImageBackend>,
    blobs: Arc<dyn BlobStore>,
    taxonomy: Arc<Taxonomy>,
    config: WorkflowConfig,
    clock: Arc<dyn Clock>,
    sessions_created: AtomicU64,
}

fn dedup_push(list: &mut Vec<Keyword>, k: Keyword) {
    if !list.iter().any(|x| x.text == k.text) {
        list.push(k);
    }
}

impl Engine {
    pub fn new(
        chat: Arc<dyn ChatBackend>,
        images: Arc<dyn ImageBackend>,
        blobs: Arc<dyn BlobStore>,
        taxonomy: Arc<Taxonomy>,
        config: WorkflowConfig,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let chat = ChatPipeline::new(chat, config.hierarchy.clone(), config.caption.clone());
        Engine { chat, images, blobs, taxonomy, config, clock, sessions_created: AtomicU64::new(0) }
    }

    /// Fully offline engine with a logical clock.
    pub fn mock(taxonomy: Arc<Taxonomy>, config: WorkflowConfig, blobs: Arc<dyn BlobStore>) -> Self {
        let chat = Arc::new(MockChat::new(taxonomy.clone(), config.hierarchy.clone(), config.caption.clone()));
        Self::new(chat, Arc::new(MockImage), blobs, taxonomy, config, Arc::new(LogicalClock::default()))
    }

    pub fn config(&self) -> &WorkflowConfig {
        &self.config
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn blobs(&self) -> &Arc<dyn BlobStore> {
        &self.blobs
    }

    // ---- helpers -------------------------------------------------------

    fn now(&self, s: &Session) -> chrono::DateTime<chrono::Utc> {
        let t = self.clock.now();
        match s.last_event_at() {
            Some(last) if last > t => last,
            _ => t,
        }
    }

    fn push_event(&self, s: &mut Session, payload: EventPayload) {
        let ts = self.now(s);
        s.events.push(InteractionEvent::new(s.id.clone(), ts, payload));
    }

    fn check_edge(s: &Session, to: Phase) -> Result<()> {
        if is_permitted(s.mode, s.phase, to) {
            Ok(())
        } else {
            Err(WorkflowError::IllegalTransition { from: s.phase, to })
        }
    }

    fn transition(s: &mut Session, to: Phase) -> Result<()> {
        Self::check_edge(s, to)?;
        s.phase_log.push(PhaseRecord { stage: s.stage.kind(), from: Some(s.phase), to });
        s.phase = to;
        Ok(())
    }

    fn enter_stage(s: &mut Session, stage: Stage) {
        s.phase_log.push(PhaseRecord { stage: stage.kind(), from: None, to: Phase::VaguePrompt });
        s.stage = stage;
        s.phase = Phase::VaguePrompt;
    }

    /// Restart from a fresh vague query: drop the hierarchy and keyword work, keep history.
    fn restart(s: &mut Session) -> Result<()> {
        Self::transition(s, Phase::VaguePrompt)?;
        if s.mode == SessionMode::Clay {
            s.hierarchy = None;
            s.keyword_draft.clear();
            s.current_prompt = None;
        }
        Ok(())
    }

    fn seed_for(s: &Session, purpose: &str) -> u64 {
        hash_u64(&[
            &s.rng_seed.to_le_bytes(),
            purpose.as_bytes(),
            &(s.events.len() as u64).to_le_bytes(),
            &(s.artifacts.len() as u64).to_le_bytes(),
        ])
    }

    fn require_clay(s: &Session, op: &'static str) -> Result<()> {
        if s.mode == SessionMode::Clay {
            Ok(())
        } else {
            Err(WorkflowError::UnsupportedMode { op, mode: s.mode })
        }
    }

    fn require_phase(s: &Session, op: &'static str, allowed: &[Phase]) -> Result<()> {
        if allowed.contains(&s.phase) {
            Ok(())
        } else {
            Err(WorkflowError::WrongPhase { op, phase: s.phase })
        }
    }

    fn non_empty(text: &str, what: &str) -> Result<String> {
        let t = text.trim();
        if t.is_empty() {
            Err(WorkflowError::validation(format!("{what} must not be empty")))
        } else {
            Ok(t.to_string())
        }
    }

    fn next_session_id(&self, rng_seed: u64) -> SessionId {
        let n = self.sessions_created.fetch_add(1, Ordering::SeqCst);
        let digest = sha256_hex(format!("{}:{n}:{rng_seed}", self.config.id_namespace).as_bytes());
        SessionId(format!("s-{}", &digest[..16]))
    }

    // ---- session lifecycle ---------------------------------------------

    pub fn create_session(&self, mode: SessionMode, style_seed: &str, rng_seed: u64) -> Result<Session> {
        let id = self.next_session_id(rng_seed);
        self.create_session_with_id(id, mode, style_seed, rng_seed)
    }

    pub fn create_session_with_id(
        &self,
        id: SessionId,
        mode: SessionMode,
        style_seed: &str,
        rng_seed: u64,
    ) -> Result<Session> {
        let style_seed = Self::non_empty(style_seed, "style_seed")?;
        if id.0.trim().is_empty() {
            return Err(WorkflowError::validation("session id must not be empty"));
        }
        Ok(Session {
            id,
            mode,
            stage: Stage::Moodboard,
            phase: Phase::VaguePrompt,
            style_seed,
            rng_seed,
            created_at: self.clock.now(),
            hierarchy: None,
            keyword_draft: Vec::new(),
            current_prompt: None,
            last_revision: 0,
            composition: self.config.composition.initial(StageKind::Moodboard),
            artifacts: Vec::new(),
            events: Vec::new(),
            phase_log: vec![PhaseRecord { stage: StageKind::Moodboard, from: None, to: Phase::VaguePrompt }],
        })
    }

    pub fn header(&self, s: &Session) -> SessionHeader {
        SessionHeader {
            format: LOG_FORMAT.into(),
            session_id: s.id.clone(),
            mode: s.mode,
            style_seed: s.style_seed.clone(),
            rng_seed: s.rng_seed,
            created_at: s.created_at,
            taxonomy_digest: Some(self.taxonomy.digest().to_string()),
        }
    }

    pub fn log_of(&self, s: &Session) -> SessionLog {
        SessionLog { header: self.header(s), events: s.events.clone() }
    }

    pub fn interaction_count(&self, s: &Session) -> usize {
        interaction_count(&s.events)
    }

    // ---- operations ----------------------------------------------------

    pub async fn submit_vague_prompt(&self, s: &mut Session, text: &str) -> Result<VagueOutcome> {
        const OP: &str = "submit_vague_prompt";
        let text = Self::non_empty(text, "vague prompt")?;
        match s.mode {
            SessionMode::Clay => {
                Self::require_phase(s, OP, &[Phase::VaguePrompt, Phase::PromptRefinement])?;
                let seed = Self::seed_for(s, "vague");
                let mut keywords = self.chat.extract_keywords(&text, Some(&s.style_seed), seed).await?;
                if keywords.styles.is_empty() {
                    keywords.styles.push(s.style_seed.clone());
                }
                let (hierarchy, warnings) = self.chat.generate_hierarchy(&keywords, seed).await?;
                for w in warnings {
                    tracing::warn!(session = %s.id, "{w}");
                }
                if s.phase == Phase::PromptRefinement {
                    Self::restart(s)?;
                }
                Self::transition(s, Phase::HierarchicalResults)?;
                let digest = hierarchy.digest();
                s.hierarchy = Some(hierarchy.clone());
                s.keyword_draft.clear();
                self.push_event(
                    s,
                    EventPayload::VaguePromptSubmitted {
                        text,
                        source: VagueSource::User,
                        hierarchy_digest: Some(digest),
                        artifact_id: None,
                        image_refs: vec![],
                    },
                );
                Ok(VagueOutcome::Hierarchy(hierarchy))
            }
            SessionMode::Baseline => {
                Self::require_phase(s, OP, &[Phase::VaguePrompt, Phase::CombinationResults])?;
                let seed = Self::seed_for(s, "baseline");
                let request = ImageRequest {
                    prompt_text: text.clone(),
                    count: 1,
                    size_hint: self.config.image_size,
                    seed: Some(seed),
                    tiles: None,
                };
                let image_refs = synthesize_images(self.images.as_ref(), self.blobs.as_ref(), &request).await?;
                let composition = match s.stage.kind() {
                    StageKind::Moodboard => CompositionParams::Moodboard {
                        tile_count: 1,
                        fashion_ratio: self.config.composition.fashion_ratio,
                    },
                    StageKind::Design => CompositionParams::Design {
                        variant_count: 1,
                        fashion_ratio: self.config.composition.fashion_ratio,
                    },
                };
                let artifact = GenerationArtifact {
                    id: ArtifactId::nth(s.artifacts.len()),
                    kind: ArtifactKind::BaselineImage,
                    stage: s.stage.kind(),
                    prompt_snapshot: PromptSnapshot::Raw(text.clone()),
                    prompt_text: text.clone(),
                    composition,
                    image_refs: image_refs.clone(),
                    backend_id: self.images.backend_id(),
                    seed_used: seed,
                    provenance: vec![],
                };
                if s.phase == Phase::CombinationResults {
                    Self::transition(s, Phase::VaguePrompt)?;
                }
                Self::transition(s, Phase::CombinationResults)?;
                s.artifacts.push(artifact.clone());
                self.push_event(
                    s,
                    EventPayload::VaguePromptSubmitted {
                        text,
                        source: VagueSource::User,
                        hierarchy_digest: None,
                        artifact_id: Some(artifact.id.clone()),
                        image_refs,
                    },
                );
                Ok(VagueOutcome::Artifact(artifact))
            }
        }
    }

    pub fn view_hierarchy(&self, s: &mut Session) -> Result<StyleHierarchy> {
        Self::require_clay(s, "view_hierarchy")?;
        let h = s
            .hierarchy
            .clone()
            .ok_or_else(|| WorkflowError::Precondition("no hierarchy yet; submit a vague prompt".into()))?;
        self.push_event(s, EventPayload::HierarchyViewed { hierarchy_digest: h.digest() });
        Ok(h)
    }

    pub fn select_keywords(
        &self,
        s: &mut Session,
        paths: &[HierarchyPath],
        new_keywords: &[String],
    ) -> Result<Vec<Keyword>> {
        const OP: &str = "select_keywords";
        Self::require_clay(s, OP)?;
        Self::require_phase(s, OP, &[Phase::HierarchicalResults, Phase::CombinationResults])?;
        if paths.is_empty() && new_keywords.is_empty() {
            return Err(WorkflowError::validation("select at least one hierarchy path or new keyword"));
        }
        let hierarchy = s
            .hierarchy
            .as_ref()
            .ok_or_else(|| WorkflowError::Precondition("no hierarchy to select from".into()))?;
        let bad: Vec<String> =
            paths.iter().filter(|p| hierarchy.resolve(p).is_none()).map(|p| p.to_string()).collect();
        if !bad.is_empty() {
            return Err(WorkflowError::validation(format!(
                "unresolvable hierarchy path(s): {}",
                bad.join(", ")
            )));
        }
        let mut draft = s.keyword_draft.clone();
        for p in paths {
            let node = hierarchy.resolve(p).expect("checked above");
            dedup_push(&mut draft, Keyword::suggested(node.text, p.clone()));
        }
        let mut cleaned = Vec::with_capacity(new_keywords.len());
        for k in new_keywords {
            let text = Self::non_empty(k, "new keyword")?;
            cleaned.push(text.clone());
            let kw = match hierarchy.find_text(&text) {
                Some(p) => Keyword::suggested(text, p),
                None => Keyword::user(text),
            };
            dedup_push(&mut draft, kw);
        }
        s.keyword_draft = draft.clone();
        self.push_event(
            s,
            EventPayload::KeywordSelected { paths: paths.to_vec(), new_keywords: cleaned, draft: draft.clone() },
        );
        Ok(draft)
    }

    fn resolve_input(hierarchy: Option<&StyleHierarchy>, input: &KeywordInput) -> Result<Keyword> {
        let text = Self::non_empty(input.text(), "keyword")?;
        match (input.path(), hierarchy) {
            (Some(p), Some(h)) => {
                let node = h.resolve(p).ok_or_else(|| {
                    WorkflowError::validation(format!("unresolvable hierarchy path {p} for {text:?}"))
                })?;
                if node.text == text {
                    return Ok(Keyword::suggested(text, p.clone()));
                }
                // Edited away from the picked node.
                Ok(match h.find_text(&text) {
                    Some(p) => Keyword::suggested(text, p),
                    None => Keyword::user(text),
                })
            }
            (Some(p), None) => Err(WorkflowError::validation(format!(
                "hierarchy path {p} given but the session has no hierarchy"
            ))),
            (None, Some(h)) => Ok(match h.find_text(&text) {
                Some(p) => Keyword::suggested(text, p),
                None => Keyword::user(text),
            }),
            (None, None) => Ok(Keyword::user(text)),
        }
    }

    pub fn refine_prompt(
        &self,
        s: &mut Session,
        keywords: &[KeywordInput],
        free_text: Option<&str>,
    ) -> Result<RefinedPrompt> {
        Self::require_clay(s, "refine_prompt")?;
        if keywords.is_empty() {
            return Err(WorkflowError::validation("a refined prompt needs at least one keyword"));
        }
        if s.phase != Phase::PromptRefinement {
            Self::check_edge(s, Phase::PromptRefinement)?;
        }
        let mut resolved = Vec::with_capacity(keywords.len());
        for k in keywords {
            dedup_push(&mut resolved, Self::resolve_input(s.hierarchy.as_ref(), k)?);
        }
        let free_text = free_text.map(str::trim).filter(|t| !t.is_empty()).map(String::from);
        let prompt = RefinedPrompt::new(resolved, free_text, s.last_revision + 1);

        if s.phase != Phase::PromptRefinement {
            Self::transition(s, Phase::PromptRefinement)?;
        }
        s.last_revision = prompt.revision;
        s.keyword_draft = prompt.keywords.clone();
        s.current_prompt = Some(prompt.clone());
        self.push_event(
            s,
            EventPayload::PromptRefined {
                keywords: prompt.keywords.clone(),
                free_text: prompt.free_text.clone(),
                revision: prompt.revision,
                specificity: prompt.specificity,
            },
        );
        Ok(prompt)
    }

    fn prompt_text(prompt: &RefinedPrompt, comp: &CompositionParams) -> String {
        let keywords = prompt.keyword_texts().join(", ");
        let extra = prompt.free_text.as_deref().map(|t| format!(" {t}")).unwrap_or_default();
        match comp {
            CompositionParams::Moodboard { tile_count, fashion_ratio } => {
                let garments = (*tile_count as f64 * fashion_ratio).round() as u32;
                format!(
                    "Fashion moodboard collage of {tile_count} images ({garments} garments on models, {} objects or textures). Keywords: {keywords}.{extra}",
                    tile_count - garments
                )
            }
            CompositionParams::Design { variant_count, .. } => {
                format!("{variant_count} fashion design variants. Keywords: {keywords}.{extra}")
            }
        }
    }

    fn tiles(prompt: &RefinedPrompt, tile_count: u32, fashion_ratio: f64) -> Vec<TileSpec> {
        let garments = (tile_count as f64 * fashion_ratio).round() as usize;
        let labels = prompt.keyword_texts();
        (0..tile_count as usize)
            .map(|i| TileSpec {
                label: labels[i % labels.len()].to_string(),
                kind: if i < garments { TileKind::Garment } else { TileKind::Object },
            })
            .collect()
    }

    async fn render(
        &self,
        s: &Session,
        prompt: &RefinedPrompt,
        composition: CompositionParams,
        purpose: &str,
    ) -> Result<GenerationArtifact> {
        let seed = Self::seed_for(s, purpose);
        let prompt_text = Self::prompt_text(prompt, &composition);
        let (kind, count, tiles) = match composition {
            CompositionParams::Moodboard { tile_count, fashion_ratio } => {
                (ArtifactKind::MoodboardImage, 1, Some(Self::tiles(prompt, tile_count, fashion_ratio)))
            }
            CompositionParams::Design { variant_count, .. } => (ArtifactKind::DesignImageSet, variant_count, None),
        };
        let request = ImageRequest {
            prompt_text: prompt_text.clone(),
            count,
            size_hint: self.config.image_size,
            seed: Some(seed),
            tiles,
        };
        let image_refs = synthesize_images(self.images.as_ref(), self.blobs.as_ref(), &request).await?;
        let provenance = prompt
            .keywords
            .iter()
            .map(|k| KeywordLineage {
                text: k.text.clone(),
                path_names: k
                    .hierarchy_path
                    .as_ref()
                    .and_then(|p| s.hierarchy.as_ref().and_then(|h| h.resolve(p)))
                    .map(|n| n.lineage)
                    .unwrap_or_default(),
            })
            .collect();
        Ok(GenerationArtifact {
            id: ArtifactId::nth(s.artifacts.len()),
            kind,
            stage: s.stage.kind(),
            prompt_snapshot: PromptSnapshot::Refined(prompt.clone()),
            prompt_text,
            composition,
            image_refs,
            backend_id: self.images.backend_id(),
            seed_used: seed,
            provenance,
        })
    }

    pub async fn generate_combination(&self, s: &mut Session) -> Result<GenerationArtifact> {
        const OP: &str = "generate_combination";
        Self::require_clay(s, OP)?;
        Self::require_phase(s, OP, &[Phase::PromptRefinement])?;
        let prompt = s
            .current_prompt
            .clone()
            .ok_or_else(|| WorkflowError::Precondition("refine a prompt before generating".into()))?;
        let artifact = self.render(s, &prompt, s.composition, "generate").await?;
        Self::transition(s, Phase::CombinationResults)?;
        s.artifacts.push(artifact.clone());
        self.push_event(
            s,
            EventPayload::GenerationRequested {
                artifact_id: artifact.id.clone(),
                composition: artifact.composition,
                image_refs: artifact.image_refs.clone(),
            },
        );
        Ok(artifact)
    }

    pub async fn modify_composition(&self, s: &mut Session, directive: Directive) -> Result<CompositionOutcome> {
        const OP: &str = "modify_composition";
        Self::require_clay(s, OP)?;
        Self::require_phase(s, OP, &[Phase::CombinationResults])?;
        let latest = s
            .latest_artifact_in_stage()
            .ok_or_else(|| WorkflowError::Precondition("no artifact in the current stage to rework".into()))?;
        let prompt = match (&s.current_prompt, &latest.prompt_snapshot) {
            (Some(p), _) => p.clone(),
            (None, PromptSnapshot::Refined(p)) => p.clone(),
            (None, PromptSnapshot::Raw(_)) => {
                return Err(WorkflowError::Precondition("latest artifact has no refined prompt".into()))
            }
        };
        let c = &self.config.composition;
        let (composition, clamped) = s.composition.apply(directive, c.count_step, c.ratio_step, c.max_count);
        if clamped {
            tracing::warn!(session = %s.id, ?directive, "composition directive clamped at a bound");
        }
        let artifact = self.render(s, &prompt, composition, "compose").await?;
        s.composition = composition;
        s.artifacts.push(artifact.clone());
        self.push_event(
            s,
            EventPayload::CompositionDirective {
                directive,
                clamped,
                artifact_id: artifact.id.clone(),
                composition,
                image_refs: artifact.image_refs.clone(),
            },
        );
        Ok(CompositionOutcome { artifact, composition, clamped })
    }

    fn wrap_suggestions(style: &str, artifact_id: &ArtifactId, suggestions: ElementSuggestions) -> StyleHierarchy {
        StyleHierarchy {
            styles: vec![StyleNode {
                name: style.to_string(),
                moods: vec![],
                sub_styles: vec![SubStyleNode {
                    name: format!("moodboard {artifact_id}"),
                    elements: suggestions
                        .elements
                        .into_iter()
                        .map(|e| ElementNode { category: e.category, sub_elements: e.sub_elements })
                        .collect(),
                }],
            }],
        }
    }

    /// Moves to the design stage from the selected moodboard. In Clay mode
    /// the moodboard is captioned and the suggestions become the design
    /// stage's hierarchy, which counts as that stage's vague query.
    pub async fn advance_stage(&self, s: &mut Session, artifact_id: &ArtifactId) -> Result<Option<StyleHierarchy>> {
        if s.stage.kind() != StageKind::Moodboard {
            return Err(WorkflowError::Precondition("the session is already in the design stage".into()));
        }
        let has_any = match s.mode {
            SessionMode::Clay => s.artifacts.iter().any(|a| a.kind == ArtifactKind::MoodboardImage),
            SessionMode::Baseline => !s.artifacts.is_empty(),
        };
        if !has_any {
            return Err(WorkflowError::Precondition("generate a moodboard before advancing".into()));
        }
        let artifact = s
            .artifact(artifact_id)
            .cloned()
            .ok_or_else(|| WorkflowError::validation(format!("no artifact {artifact_id} in this session")))?;

        match s.mode {
            SessionMode::Baseline => {
                Self::enter_stage(s, Stage::Design { source_moodboard: artifact_id.clone() });
                s.composition = self.config.composition.initial(StageKind::Design);
                self.push_event(
                    s,
                    EventPayload::StageAdvanced { artifact_id: artifact_id.clone(), hierarchy_digest: None },
                );
                Ok(None)
            }
            SessionMode::Clay => {
                if artifact.kind != ArtifactKind::MoodboardImage {
                    return Err(WorkflowError::validation(format!("artifact {artifact_id} is not a moodboard")));
                }
                let image = if self.chat.accepts_images() {
                    let first = artifact.image_refs.first().expect("artifacts have images");
                    let bytes = self
                        .blobs
                        .get(first)
                        .map_err(|e| WorkflowError::Store(e.to_string()))?
                        .ok_or_else(|| WorkflowError::Store(format!("missing blob {first}")))?;
                    Some(ChatImage {
                        mime: "image/png".into(),
                        data_base64: base64::engine::general_purpose::STANDARD.encode(bytes),
                    })
                } else {
                    None
                };
                let seed = Self::seed_for(s, "caption");
                let suggestions = self.chat.caption(&artifact, image, Some(&s.style_seed), seed).await?;
                let style = artifact
                    .provenance
                    .iter()
                    .find_map(|l| l.path_names.first().cloned())
                    .unwrap_or_else(|| s.style_seed.clone());
                let hierarchy = Self::wrap_suggestions(&style, artifact_id, suggestions);
                hierarchy.validate().map_err(|v| {
                    BackendError::Structural(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "))
                })?;
                let digest = hierarchy.digest();

                Self::enter_stage(s, Stage::Design { source_moodboard: artifact_id.clone() });
                s.composition = self.config.composition.initial(StageKind::Design);
                s.keyword_draft.clear();
                s.current_prompt = None;
                s.hierarchy = Some(hierarchy.clone());
                self.push_event(
                    s,
                    EventPayload::StageAdvanced {
                        artifact_id: artifact_id.clone(),
                        hierarchy_digest: Some(digest.clone()),
                    },
                );
                Self::transition(s, Phase::HierarchicalResults)?;
                self.push_event(
                    s,
                    EventPayload::VaguePromptSubmitted {
                        text: format!("design from moodboard {artifact_id}"),
                        source: VagueSource::Moodboard { moodboard_id: artifact_id.clone() },
                        hierarchy_digest: Some(digest),
                        artifact_id: None,
                        image_refs: vec![],
                    },
                );
                Ok(Some(hierarchy))
            }
        }
    }

    /// Explicit phase change along a permitted edge.
    pub fn advance_phase(&self, s: &mut Session, to: Phase) -> Result<()> {
        Self::check_edge(s, to)?;
        match to {
            Phase::HierarchicalResults if s.hierarchy.is_none() => {
                Err(WorkflowError::Precondition("no hierarchy yet; submit a vague prompt".into()))
            }
            Phase::CombinationResults if s.latest_artifact_in_stage().is_none() => {
                Err(WorkflowError::Precondition("no results in this stage yet".into()))
            }
            Phase::VaguePrompt => Self::restart(s),
            _ => Self::transition(s, to),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blob::MemoryBlobStore;

    fn engine() -> Engine {
        let config = WorkflowConfig { image_size: (32, 32), ..WorkflowConfig::default() };
        Engine::mock(Arc::new(Taxonomy::bundled()), config, Arc::new(MemoryBlobStore::new()))
    }

    fn run<F: std::future::Future>(f: F) -> F::Output {
        tokio::runtime::Builder::new_current_thread().build().unwrap().block_on(f)
    }

    #[test]
    fn create_session_examples() {
        let e = engine();
        let s = e.create_session(SessionMode::Clay, "feminine", 42).unwrap();
        assert_eq!((s.stage.kind(), s.phase), (StageKind::Moodboard, Phase::VaguePrompt));
        assert!(s.artifacts.is_empty() && s.events.is_empty());
        let b = e.create_session(SessionMode::Baseline, "vintage", 7).unwrap();
        assert!(b.hierarchy.is_none());
        assert_ne!(s.id, b.id);
        assert!(matches!(e.create_session(SessionMode::Clay, "", 1), Err(WorkflowError::Validation(_))));
        assert!(matches!(e.create_session(SessionMode::Clay, "  ", 1), Err(WorkflowError::Validation(_))));
    }

    #[test]
    fn clay_vague_prompt_builds_hierarchy() {
        let e = engine();
        let mut s = e.create_session(SessionMode::Clay, "athleisure", 1).unwrap();
        let out = run(e.submit_vague_prompt(
            &mut s,
            "create a moodboard for an athleisure casual look suitable for a resort",
        ))
        .unwrap();
        let VagueOutcome::Hierarchy(h) = out else { panic!("expected a hierarchy") };
        assert!(h.sub_style_names().contains(&"Summer Breeze Athleisure"));
        assert_eq!(s.phase, Phase::HierarchicalResults);
        assert_eq!(s.events.len(), 1);
        assert_eq!(e.interaction_count(&s), 1);
        assert!(matches!(run(e.submit_vague_prompt(&mut s, "")), Err(WorkflowError::Validation(_))));
    }

    #[test]
    fn baseline_vague_prompt_makes_one_image() {
        let e = engine();
        let mut s = e.create_session(SessionMode::Baseline, "hip-hop", 3).unwrap();
        let out = run(e.submit_vague_prompt(&mut s, "bold Y2K accessory moodboard")).unwrap();
        let VagueOutcome::Artifact(a) = out else { panic!("expected an artifact") };
        assert_eq!(a.kind, ArtifactKind::BaselineImage);
        assert_eq!(a.image_refs.len(), 1);
        assert!(s.hierarchy.is_none());
        assert_eq!(s.phase, Phase::CombinationResults);
        run(e.submit_vague_prompt(&mut s, "again")).unwrap();
        assert_eq!(e.interaction_count(&s), 2);
        assert!(matches!(
            run(e.modify_composition(&mut s, Directive::ReduceTileCount)),
            Err(WorkflowError::UnsupportedMode { .. })
        ));
        assert!(matches!(e.view_hierarchy(&mut s), Err(WorkflowError::UnsupportedMode { .. })));
    }

    fn clay_with_hierarchy(e: &Engine) -> Session {
        let mut s = e.create_session(SessionMode::Clay, "athleisure", 5).unwrap();
        run(e.submit_vague_prompt(&mut s, "athleisure casual look for a resort")).unwrap();
        s
    }

    #[test]
    fn keyword_selection_tags_origin() {
        let e = engine();
        let mut s = clay_with_hierarchy(&e);
        let h = s.hierarchy.clone().unwrap();
        let pastel = h.find_text("pastel tones of blue, pink, and white").unwrap();
        let mesh = h.find_text("breathable mesh").unwrap();
        let draft = e.select_keywords(&mut s, &[pastel.clone(), mesh], &[]).unwrap();
        assert_eq!(draft.len(), 2);
        assert!(draft.iter().all(|k| k.origin == crate::keyword::KeywordOrigin::HierarchySuggested));
        let draft = e.select_keywords(&mut s, &[pastel], &["active skirt".into()]).unwrap();
        assert_eq!(draft.len(), 3);
        assert_eq!(draft[2], Keyword::user("active skirt"));
        assert!(matches!(e.select_keywords(&mut s, &[], &[]), Err(WorkflowError::Validation(_))));
        match e.select_keywords(&mut s, &[HierarchyPath::new([0, 9, 0, 0])], &[]) {
            Err(WorkflowError::Validation(m)) => assert!(m.contains("0/9/0/0")),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(e.interaction_count(&s), 1);
    }

    #[test]
    fn refinement_revisions_and_generation() {
        let e = engine();
        let mut s = clay_with_hierarchy(&e);
        assert!(matches!(e.refine_prompt(&mut s, &[], None), Err(WorkflowError::Validation(_))));
        let p1 = e.refine_prompt(&mut s, &["olive green".into()], None).unwrap();
        let p2 = e.refine_prompt(&mut s, &["vintage faded olive green".into()], None).unwrap();
        let p3 = e.refine_prompt(&mut s, &["vintage faded olive green".into()], None).unwrap();
        assert_eq!((p1.revision, p2.revision, p3.revision), (1, 2, 3));
        assert_eq!(p3.keywords, p2.keywords);
        let a = run(e.generate_combination(&mut s)).unwrap();
        assert_eq!(a.kind, ArtifactKind::MoodboardImage);
        assert_eq!(a.composition.count(), 6);
        assert_eq!(s.phase, Phase::CombinationResults);
        assert!(matches!(run(e.generate_combination(&mut s)), Err(WorkflowError::WrongPhase { .. })));
        let out = run(e.modify_composition(&mut s, Directive::ReduceTileCount)).unwrap();
        assert_eq!(out.composition.count(), 4);
        assert!(!out.clamped);
        assert_eq!(e.interaction_count(&s), 3);
    }

    #[test]
    fn forbidden_edges_name_both_ends() {
        let e = engine();
        let mut s = e.create_session(SessionMode::Clay, "chic", 1).unwrap();
        match e.advance_phase(&mut s, Phase::CombinationResults) {
            Err(WorkflowError::IllegalTransition { from, to }) => {
                assert_eq!((from, to), (Phase::VaguePrompt, Phase::CombinationResults))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dg3_restart_clears_work_but_keeps_history() {
        let e = engine();
        let mut s = clay_with_hierarchy(&e);
        e.refine_prompt(&mut s, &["sky blue".into()], None).unwrap();
        run(e.generate_combination(&mut s)).unwrap();
        e.advance_phase(&mut s, Phase::PromptRefinement).unwrap();
        e.advance_phase(&mut s, Phase::VaguePrompt).unwrap();
        assert!(s.hierarchy.is_none() && s.current_prompt.is_none() && s.keyword_draft.is_empty());
        assert_eq!(s.artifacts.len(), 1);
        assert_eq!(s.events.len(), 3);
        run(e.submit_vague_prompt(&mut s, "vintage")).unwrap();
        let p = e.refine_prompt(&mut s, &["vintage".into()], None).unwrap();
        assert_eq!(p.revision, 2);
    }

    #[test]
    fn stage_advance_preconditions() {
        let e = engine();
        let mut s = clay_with_hierarchy(&e);
        assert!(matches!(
            run(e.advance_stage(&mut s, &ArtifactId::nth(0))),
            Err(WorkflowError::Precondition(_))
        ));
        e.refine_prompt(&mut s, &["sky blue".into()], None).unwrap();
        run(e.generate_combination(&mut s)).unwrap();
        assert!(matches!(
            run(e.advance_stage(&mut s, &ArtifactId::nth(7))),
            Err(WorkflowError::Validation(_))
        ));
        let h = run(e.advance_stage(&mut s, &ArtifactId::nth(0))).unwrap().unwrap();
        assert_eq!(s.stage.kind(), StageKind::Design);
        assert_eq!(s.phase, Phase::HierarchicalResults);
        assert_eq!(h.styles[0].sub_styles[0].name, "moodboard art-000");
        assert_eq!(s.composition.count(), 4);
        assert!(matches!(
            run(e.advance_stage(&mut s, &ArtifactId::nth(0))),
            Err(WorkflowError::Precondition(_))
        ));
    }

    #[test]
    fn failed_backend_leaves_session_untouched() {
        let e = engine();
        let mut s = e.create_session(SessionMode::Clay, "zzz-unknown", 1).unwrap();
        let before = s.clone();
        let err = run(e.submit_vague_prompt(&mut s, "qqq")).unwrap_err();
        assert!(matches!(err, WorkflowError::Backend(BackendError::UnknownStyle { .. })));
        assert_eq!(s, before);
    }
}
