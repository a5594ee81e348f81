//! Whole-session consistency checks, used by tests and the store audit.

use crate::events::{EventKind, EventPayload};
use crate::keyword::KeywordOrigin;
use crate::session::{is_permitted, ArtifactKind, Session, SessionMode, StageKind};

/// Returns one message per violated invariant; empty means consistent.
pub fn check_session(s: &Session) -> Vec<String> {
    let mut out = Vec::new();

    // Phase graph: stage entries open at VaguePrompt, every other record is
    // a permitted edge continuing from the previous record.
    let mut prev: Option<(StageKind, crate::session::Phase)> = None;
    for (i, r) in s.phase_log.iter().enumerate() {
        match r.from {
            None => {
                if r.to != crate::session::Phase::VaguePrompt {
                    out.push(format!("phase record {i}: stage entry at {}", r.to));
                }
                if let Some((stage, _)) = prev {
                    if !(stage == StageKind::Moodboard && r.stage == StageKind::Design) {
                        out.push(format!("phase record {i}: stage {:?} -> {:?}", stage, r.stage));
                    }
                }
            }
            Some(from) => {
                match prev {
                    Some((stage, last)) if stage == r.stage && last == from => {}
                    _ => out.push(format!("phase record {i}: does not continue the history")),
                }
                if !is_permitted(s.mode, from, r.to) {
                    out.push(format!("phase record {i}: forbidden edge {from} -> {}", r.to));
                }
            }
        }
        prev = Some((r.stage, r.to));
    }
    if prev != Some((s.stage.kind(), s.phase)) {
        out.push("current phase differs from the last phase record".into());
    }

    // Mode separation.
    if s.mode == SessionMode::Baseline {
        if s.hierarchy.is_some() {
            out.push("baseline session has a hierarchy".into());
        }
        for e in &s.events {
            if matches!(
                e.kind,
                EventKind::HierarchyViewed | EventKind::KeywordSelected | EventKind::CompositionDirective
            ) {
                out.push(format!("baseline session logged {:?}", e.kind));
            }
        }
    }

    // Event log integrity and ordering.
    for (i, e) in s.events.iter().enumerate() {
        if let Err(m) = e.verify() {
            out.push(format!("event {i}: {m}"));
        }
        if e.session_id != s.id {
            out.push(format!("event {i}: foreign session id"));
        }
        if i > 0 && e.timestamp < s.events[i - 1].timestamp {
            out.push(format!("event {i}: timestamp goes backwards"));
        }
    }

    // Clay ordering: combination results follow a refinement in the same stage.
    let mut refined_in_stage = false;
    let mut revision = 0;
    for (i, e) in s.events.iter().enumerate() {
        match &e.payload {
            EventPayload::StageAdvanced { .. } => refined_in_stage = false,
            EventPayload::PromptRefined { revision: r, .. } => {
                refined_in_stage = true;
                if *r != revision + 1 {
                    out.push(format!("event {i}: revision {r} after {revision}"));
                }
                revision = *r;
            }
            EventPayload::GenerationRequested { .. } | EventPayload::CompositionDirective { .. }
                if !refined_in_stage =>
            {
                out.push(format!("event {i}: generation without a refinement in this stage"));
            }
            _ => {}
        }
    }
    if s.last_revision != revision {
        out.push(format!("last_revision {} but log ends at {revision}", s.last_revision));
    }

    // Artifacts.
    for a in &s.artifacts {
        if a.image_refs.is_empty() {
            out.push(format!("artifact {} has no images", a.id));
        }
        let kind_ok = match s.mode {
            SessionMode::Baseline => a.kind == ArtifactKind::BaselineImage,
            SessionMode::Clay => match a.stage {
                StageKind::Moodboard => a.kind == ArtifactKind::MoodboardImage,
                StageKind::Design => a.kind == ArtifactKind::DesignImageSet,
            },
        };
        if !kind_ok {
            out.push(format!("artifact {} has kind {:?} in {:?}", a.id, a.kind, a.stage));
        }
    }

    // Keyword provenance against the current hierarchy.
    let prompt_keywords = s.current_prompt.iter().flat_map(|p| p.keywords.iter());
    for k in s.keyword_draft.iter().chain(prompt_keywords) {
        match (&k.origin, &k.hierarchy_path, &s.hierarchy) {
            (KeywordOrigin::HierarchySuggested, Some(_), Some(h)) => {
                if !k.resolves_in(h) {
                    out.push(format!("keyword {:?} does not resolve", k.text));
                }
            }
            (KeywordOrigin::HierarchySuggested, _, _) => {
                out.push(format!("suggested keyword {:?} without a resolvable path", k.text))
            }
            (KeywordOrigin::UserOriginated, Some(_), _) => {
                out.push(format!("user keyword {:?} carries a path", k.text))
            }
            (KeywordOrigin::UserOriginated, None, Some(h)) => {
                if h.find_text(&k.text).is_some() {
                    out.push(format!("keyword {:?} is in the hierarchy but tagged as user", k.text));
                }
            }
            (KeywordOrigin::UserOriginated, None, None) => {}
        }
    }

    out
}
