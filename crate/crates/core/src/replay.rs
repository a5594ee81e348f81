//! Re-executes a session log against an engine and compares the outcome
//! record by record. With mock backends the payload digests, which cover
//! hierarchy digests and image hashes, must match exactly.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::engine::Engine;
use crate::error::{Result, WorkflowError};
use crate::events::{EventPayload, SessionLog, VagueSource};
use crate::keyword::KeywordInput;
use crate::session::{is_permitted, Phase, Session, SessionMode};

/// Explicit phase changes are not logged. Before each replayed operation,
/// walk the shortest permitted path to a phase the operation accepts.
fn align(engine: &Engine, s: &mut Session, wanted: &[Phase]) {
    if wanted.contains(&s.phase) {
        return;
    }
    let mut prev: Vec<Option<Phase>> = vec![None; Phase::ALL.len()];
    let idx = |p: Phase| Phase::ALL.iter().position(|&q| q == p).expect("phase listed");
    let mut queue = VecDeque::from([s.phase]);
    let mut seen = vec![false; Phase::ALL.len()];
    seen[idx(s.phase)] = true;
    let target = loop {
        let Some(at) = queue.pop_front() else { return };
        if wanted.contains(&at) {
            break at;
        }
        for &next in Phase::ALL.iter() {
            if !seen[idx(next)] && is_permitted(s.mode, at, next) {
                seen[idx(next)] = true;
                prev[idx(next)] = Some(at);
                queue.push_back(next);
            }
        }
    };
    let mut path = vec![target];
    while let Some(p) = prev[idx(*path.last().expect("non-empty"))] {
        path.push(p);
    }
    for &step in path.iter().rev().skip(1) {
        if engine.advance_phase(s, step).is_err() {
            return;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    /// Index into the original event list.
    pub index: usize,
    pub expected: String,
    pub actual: String,
}

#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub session: Session,
    pub divergences: Vec<Divergence>,
}

impl ReplayReport {
    pub fn is_faithful(&self) -> bool {
        self.divergences.is_empty()
    }
}

pub async fn replay(engine: &Engine, log: &SessionLog) -> Result<ReplayReport> {
    let h = &log.header;
    if let (Some(expected), actual) = (&h.taxonomy_digest, engine.taxonomy().digest()) {
        if expected != actual {
            return Err(WorkflowError::Precondition(format!(
                "log was recorded with taxonomy {expected}, engine has {actual}"
            )));
        }
    }
    let mut s = engine.create_session_with_id(h.session_id.clone(), h.mode, &h.style_seed, h.rng_seed)?;
    s.created_at = h.created_at;

    for event in &log.events {
        let outcome = match &event.payload {
            EventPayload::VaguePromptSubmitted { source: VagueSource::Moodboard { .. }, .. } => continue,
            EventPayload::VaguePromptSubmitted { text, .. } => {
                let wanted = match s.mode {
                    SessionMode::Clay => [Phase::VaguePrompt, Phase::PromptRefinement],
                    SessionMode::Baseline => [Phase::VaguePrompt, Phase::CombinationResults],
                };
                align(engine, &mut s, &wanted);
                engine.submit_vague_prompt(&mut s, text).await.map(drop)
            }
            EventPayload::HierarchyViewed { .. } => engine.view_hierarchy(&mut s).map(drop),
            EventPayload::KeywordSelected { paths, new_keywords, .. } => {
                align(engine, &mut s, &[Phase::HierarchicalResults, Phase::CombinationResults]);
                engine.select_keywords(&mut s, paths, new_keywords).map(drop)
            }
            EventPayload::PromptRefined { keywords, free_text, .. } => {
                align(engine, &mut s, &[Phase::HierarchicalResults, Phase::CombinationResults, Phase::PromptRefinement]);
                let inputs: Vec<KeywordInput> = keywords.iter().map(KeywordInput::from).collect();
                engine.refine_prompt(&mut s, &inputs, free_text.as_deref()).map(drop)
            }
            EventPayload::GenerationRequested { .. } => {
                align(engine, &mut s, &[Phase::PromptRefinement]);
                engine.generate_combination(&mut s).await.map(drop)
            }
            EventPayload::CompositionDirective { directive, .. } => {
                align(engine, &mut s, &[Phase::CombinationResults]);
                engine.modify_composition(&mut s, *directive).await.map(drop)
            }
            EventPayload::StageAdvanced { artifact_id, .. } => {
                engine.advance_stage(&mut s, artifact_id).await.map(drop)
            }
        };
        outcome?;
    }

    let mut divergences = Vec::new();
    let n = log.events.len().max(s.events.len());
    for i in 0..n {
        let expected = log.events.get(i).map(|e| e.payload_digest.clone()).unwrap_or_default();
        let actual = s.events.get(i).map(|e| e.payload_digest.clone()).unwrap_or_default();
        if expected != actual {
            divergences.push(Divergence { index: i, expected, actual });
        }
    }
    Ok(ReplayReport { session: s, divergences })
}
