//! Session state and the phase graph it moves through.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::blob::ContentRef;
use crate::events::{EventKind, InteractionEvent};
use crate::hierarchy::StyleHierarchy;
use crate::keyword::{Keyword, RefinedPrompt};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub String);

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Session-scoped artifact identifier (`art-000`, `art-001`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArtifactId(pub String);

impl ArtifactId {
    pub fn nth(index: usize) -> Self {
        ArtifactId(format!("art-{index:03}"))
    }
}

impl fmt::Display for ArtifactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionMode {
    #[serde(alias = "Clay")]
    Clay,
    #[serde(alias = "Baseline")]
    Baseline,
}

impl fmt::Display for SessionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionMode::Clay => "Clay",
            SessionMode::Baseline => "Baseline",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    VaguePrompt,
    HierarchicalResults,
    PromptRefinement,
    CombinationResults,
}

impl Phase {
    pub const ALL: [Phase; 4] = [
        Phase::VaguePrompt,
        Phase::HierarchicalResults,
        Phase::PromptRefinement,
        Phase::CombinationResults,
    ];
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::VaguePrompt => "VaguePrompt",
            Phase::HierarchicalResults => "HierarchicalResults",
            Phase::PromptRefinement => "PromptRefinement",
            Phase::CombinationResults => "CombinationResults",
        })
    }
}

/// Whether `from -> to` is an edge of the mode's phase graph.
pub fn is_permitted(mode: SessionMode, from: Phase, to: Phase) -> bool {
    use Phase::*;
    match mode {
        SessionMode::Clay => matches!(
            (from, to),
            (VaguePrompt, HierarchicalResults)
                | (HierarchicalResults, PromptRefinement)
                | (PromptRefinement, CombinationResults)
                | (CombinationResults, PromptRefinement)
                | (PromptRefinement, VaguePrompt)
        ),
        SessionMode::Baseline => {
            matches!((from, to), (VaguePrompt, CombinationResults) | (CombinationResults, VaguePrompt))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StageKind {
    Moodboard,
    Design,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage")]
pub enum Stage {
    Moodboard,
    Design { source_moodboard: ArtifactId },
}

impl Stage {
    pub fn kind(&self) -> StageKind {
        match self {
            Stage::Moodboard => StageKind::Moodboard,
            Stage::Design { .. } => StageKind::Design,
        }
    }
}

/// One entry of the phase history: a stage entry (`from = None`) or an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub stage: StageKind,
    pub from: Option<Phase>,
    pub to: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Directive {
    #[serde(alias = "ReduceTileCount")]
    ReduceTileCount,
    #[serde(alias = "IncreaseTileCount")]
    IncreaseTileCount,
    #[serde(alias = "IncreaseFashionRatio")]
    IncreaseFashionRatio,
    #[serde(alias = "DecreaseFashionRatio")]
    DecreaseFashionRatio,
}

/// Layout of a generation. `fashion_ratio` is the share of garment-on-model
/// tiles versus object/texture tiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum CompositionParams {
    Moodboard { tile_count: u32, fashion_ratio: f64 },
    Design { variant_count: u32, fashion_ratio: f64 },
}

impl CompositionParams {
    pub fn count(&self) -> u32 {
        match self {
            CompositionParams::Moodboard { tile_count, .. } => *tile_count,
            CompositionParams::Design { variant_count, .. } => *variant_count,
        }
    }

    pub fn fashion_ratio(&self) -> f64 {
        match self {
            CompositionParams::Moodboard { fashion_ratio, .. }
            | CompositionParams::Design { fashion_ratio, .. } => *fashion_ratio,
        }
    }

    fn with(&self, count: u32, ratio: f64) -> Self {
        match self {
            CompositionParams::Moodboard { .. } => {
                CompositionParams::Moodboard { tile_count: count, fashion_ratio: ratio }
            }
            CompositionParams::Design { .. } => {
                CompositionParams::Design { variant_count: count, fashion_ratio: ratio }
            }
        }
    }

    /// Applies a directive; the flag reports whether a bound clamped it.
    pub fn apply(
        &self,
        directive: Directive,
        count_step: u32,
        ratio_step: f64,
        max_count: u32,
    ) -> (Self, bool) {
        let count = self.count() as i64;
        let ratio = self.fashion_ratio();
        let (raw_count, raw_ratio) = match directive {
            Directive::ReduceTileCount => (count - count_step as i64, ratio),
            Directive::IncreaseTileCount => (count + count_step as i64, ratio),
            Directive::IncreaseFashionRatio => (count, ratio + ratio_step),
            Directive::DecreaseFashionRatio => (count, ratio - ratio_step),
        };
        let new_count = raw_count.clamp(1, max_count.max(1) as i64);
        let new_ratio = raw_ratio.clamp(0.0, 1.0);
        let clamped = new_count != raw_count || new_ratio != raw_ratio;
        (self.with(new_count as u32, new_ratio), clamped)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.count() < 1 {
            return Err("tile/variant count must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.fashion_ratio()) {
            return Err("fashion ratio must lie in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArtifactKind {
    MoodboardImage,
    DesignImageSet,
    BaselineImage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum PromptSnapshot {
    Refined(RefinedPrompt),
    Raw(String),
}

/// Where a prompt keyword came from, resolved to names at generation time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordLineage {
    pub text: String,
    /// Node names from the style down; empty for user keywords.
    pub path_names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationArtifact {
    pub id: ArtifactId,
    pub kind: ArtifactKind,
    pub stage: StageKind,
    pub prompt_snapshot: PromptSnapshot,
    /// Text actually sent to the image backend.
    pub prompt_text: String,
    pub composition: CompositionParams,
    pub image_refs: Vec<ContentRef>,
    pub backend_id: String,
    pub seed_used: u64,
    #[serde(default)]
    pub provenance: Vec<KeywordLineage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: SessionId,
    pub mode: SessionMode,
    pub stage: Stage,
    pub phase: Phase,
    pub style_seed: String,
    pub rng_seed: u64,
    pub created_at: DateTime<Utc>,
    pub hierarchy: Option<StyleHierarchy>,
    pub keyword_draft: Vec<Keyword>,
    pub current_prompt: Option<RefinedPrompt>,
    pub last_revision: u32,
    pub composition: CompositionParams,
    pub artifacts: Vec<GenerationArtifact>,
    pub events: Vec<InteractionEvent>,
    pub phase_log: Vec<PhaseRecord>,
}

impl Session {
    pub fn interaction_count(&self) -> usize {
        interaction_count(&self.events)
    }

    pub fn artifact(&self, id: &ArtifactId) -> Option<&GenerationArtifact> {
        self.artifacts.iter().find(|a| &a.id == id)
    }

    pub fn artifacts_in_current_stage(&self) -> impl Iterator<Item = &GenerationArtifact> {
        let stage = self.stage.kind();
        self.artifacts.iter().filter(move |a| a.stage == stage)
    }

    pub fn latest_artifact_in_stage(&self) -> Option<&GenerationArtifact> {
        self.artifacts_in_current_stage().last()
    }

    pub fn last_event_at(&self) -> Option<DateTime<Utc>> {
        self.events.last().map(|e| e.timestamp)
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &InteractionEvent> {
        self.events.iter().filter(move |e| e.kind() == kind)
    }
}

pub fn interaction_count(events: &[InteractionEvent]) -> usize {
    events.iter().filter(|e| e.counts_as_interaction).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clay_graph_edges() {
        use Phase::*;
        let allowed = [
            (VaguePrompt, HierarchicalResults),
            (HierarchicalResults, PromptRefinement),
            (PromptRefinement, CombinationResults),
            (CombinationResults, PromptRefinement),
            (PromptRefinement, VaguePrompt),
        ];
        for from in Phase::ALL {
            for to in Phase::ALL {
                assert_eq!(
                    is_permitted(SessionMode::Clay, from, to),
                    allowed.contains(&(from, to)),
                    "{from} -> {to}"
                );
            }
        }
        assert!(!is_permitted(SessionMode::Clay, VaguePrompt, CombinationResults));
    }

    #[test]
    fn baseline_graph_edges() {
        use Phase::*;
        let mut count = 0;
        for from in Phase::ALL {
            for to in Phase::ALL {
                if is_permitted(SessionMode::Baseline, from, to) {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 2);
        assert!(is_permitted(SessionMode::Baseline, VaguePrompt, CombinationResults));
        assert!(is_permitted(SessionMode::Baseline, CombinationResults, VaguePrompt));
    }

    #[test]
    fn phase_names_are_stable() {
        for (p, name) in Phase::ALL.iter().zip([
            "VaguePrompt",
            "HierarchicalResults",
            "PromptRefinement",
            "CombinationResults",
        ]) {
            assert_eq!(serde_json::to_string(p).unwrap(), format!("\"{name}\""));
            assert_eq!(p.to_string(), name);
        }
    }

    #[test]
    fn composition_steps_and_clamps() {
        let mb = CompositionParams::Moodboard { tile_count: 6, fashion_ratio: 0.5 };
        let (p, c) = mb.apply(Directive::ReduceTileCount, 2, 0.25, 16);
        assert_eq!((p.count(), c), (4, false));
        let (p, c) = mb.apply(Directive::IncreaseFashionRatio, 2, 0.25, 16);
        assert_eq!((p.fashion_ratio(), c), (0.75, false));
        let (p, _) = p.apply(Directive::IncreaseFashionRatio, 2, 0.25, 16);
        let (p, c) = p.apply(Directive::IncreaseFashionRatio, 2, 0.25, 16);
        assert_eq!((p.fashion_ratio(), c), (1.0, true));

        let tiny = CompositionParams::Moodboard { tile_count: 2, fashion_ratio: 0.0 };
        let (p, c) = tiny.apply(Directive::ReduceTileCount, 2, 0.25, 16);
        assert_eq!((p.count(), c), (1, true));
        let (p, c) = tiny.apply(Directive::DecreaseFashionRatio, 2, 0.25, 16);
        assert_eq!((p.fashion_ratio(), c), (0.0, true));

        let design = CompositionParams::Design { variant_count: 4, fashion_ratio: 0.5 };
        let (p, _) = design.apply(Directive::ReduceTileCount, 2, 0.25, 16);
        assert!(matches!(p, CompositionParams::Design { variant_count: 2, .. }));
    }
}
