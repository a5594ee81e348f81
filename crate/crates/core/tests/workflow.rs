use std::sync::Arc;

use chrono::{TimeZone, Utc};
use clay_core::events::{EventPayload, InteractionEvent, VagueSource};
use clay_core::session::interaction_count;
use clay_core::{
    ArtifactId, ArtifactKind, Directive, Engine, HierarchyPath, KeywordOrigin, MemoryBlobStore, Phase,
    SessionId, SessionMode, StageKind, Taxonomy, VagueOutcome, WorkflowConfig, WorkflowError,
};

fn engine() -> Engine {
    let config = WorkflowConfig { image_size: (48, 48), ..WorkflowConfig::default() };
    Engine::mock(Arc::new(Taxonomy::bundled()), config, Arc::new(MemoryBlobStore::new()))
}

fn block_on<F: std::future::Future>(f: F) -> F::Output {
    futures::executor::block_on(f)
}

#[test]
fn interaction_count_matches_recount() {
    let id = SessionId("s".into());
    let t = Utc.with_ymd_and_hms(2024, 5, 1, 0, 0, 0).unwrap();
    let mut events = Vec::new();
    let push = |events: &mut Vec<InteractionEvent>, p: EventPayload| {
        events.push(InteractionEvent::new(id.clone(), t, p));
    };
    push(
        &mut events,
        EventPayload::VaguePromptSubmitted {
            text: "vintage".into(),
            source: VagueSource::User,
            hierarchy_digest: None,
            artifact_id: None,
            image_refs: vec![],
        },
    );
    for i in 0..3 {
        push(
            &mut events,
            EventPayload::KeywordSelected { paths: vec![HierarchyPath::new([0, i])], new_keywords: vec![], draft: vec![] },
        );
    }
    for i in 0..5 {
        push(
            &mut events,
            EventPayload::GenerationRequested {
                artifact_id: ArtifactId::nth(i),
                composition: clay_core::CompositionParams::Moodboard { tile_count: 6, fashion_ratio: 0.5 },
                image_refs: vec![],
            },
        );
    }
    // Recount oracle: kinds tallied by hand.
    let by_hand = events
        .iter()
        .filter(|e| {
            matches!(
                e.payload,
                EventPayload::VaguePromptSubmitted { .. }
                    | EventPayload::GenerationRequested { .. }
                    | EventPayload::CompositionDirective { .. }
            )
        })
        .count();
    assert_eq!(by_hand, 6);
    assert_eq!(interaction_count(&events), 6);
    assert_eq!(interaction_count(&[]), 0);
}

#[test]
fn baseline_eleven_prompts_count_eleven() {
    let e = engine();
    let mut s = e.create_session(SessionMode::Baseline, "chic", 11).unwrap();
    for i in 0..11 {
        block_on(e.submit_vague_prompt(&mut s, &format!("chic outfit idea {i}"))).unwrap();
    }
    assert_eq!(e.interaction_count(&s), 11);
    assert_eq!(s.artifacts.len(), 11);
    assert!(s.artifacts.iter().all(|a| a.kind == ArtifactKind::BaselineImage));
}

#[test]
fn vintage_hierarchy_contains_named_sub_styles() {
    let e = engine();
    let mut s = e.create_session(SessionMode::Clay, "vintage", 42).unwrap();
    let VagueOutcome::Hierarchy(h) = block_on(e.submit_vague_prompt(&mut s, "vintage")).unwrap() else {
        panic!("clay returns a hierarchy")
    };
    let subs = h.sub_style_names();
    assert!(subs.contains(&"vintage granny"));
    assert!(subs.contains(&"romantic vintage"));
}

#[test]
fn scenario_keywords_and_design_stage() {
    let e = engine();
    let mut s = e.create_session(SessionMode::Clay, "athleisure", 9).unwrap();
    block_on(e.submit_vague_prompt(
        &mut s,
        "create a moodboard for an athleisure casual look suitable for a resort",
    ))
    .unwrap();
    let h = e.view_hierarchy(&mut s).unwrap();
    let pastel = h.find_text("pastel tones of blue, pink, and white").unwrap();
    let mesh = h.find_text("breathable mesh").unwrap();
    let draft = e.select_keywords(&mut s, &[pastel, mesh], &[]).unwrap();
    assert!(draft.iter().all(|k| k.origin == KeywordOrigin::HierarchySuggested));
    let inputs: Vec<_> = draft.iter().map(Into::into).collect();
    e.refine_prompt(&mut s, &inputs, None).unwrap();
    let moodboard = block_on(e.generate_combination(&mut s)).unwrap();
    assert_eq!(moodboard.composition.count(), 6);

    let more = block_on(e.modify_composition(&mut s, Directive::IncreaseFashionRatio)).unwrap();
    assert_eq!(more.composition.fashion_ratio(), 0.75);

    let h = block_on(e.advance_stage(&mut s, &moodboard.id)).unwrap().unwrap();
    let texts: Vec<String> = h
        .paths()
        .iter()
        .filter_map(|p| h.resolve(p))
        .map(|n| n.text)
        .collect();
    assert!(texts.iter().any(|t| t == "drawstring waist"));
    assert!(texts.iter().any(|t| t == "thin straps"));

    let waist = h.find_text("drawstring waist").unwrap();
    let draft = e.select_keywords(&mut s, &[waist], &["active skirt".into()]).unwrap();
    assert_eq!(draft[1].origin, KeywordOrigin::UserOriginated);
    let inputs: Vec<_> = draft.iter().map(Into::into).collect();
    let p = e.refine_prompt(&mut s, &inputs, None).unwrap();
    assert_eq!(p.specificity, 4.0 + 3.0);
    let design = block_on(e.generate_combination(&mut s)).unwrap();
    assert_eq!(design.kind, ArtifactKind::DesignImageSet);
    assert_eq!(design.image_refs.len(), 4);
    assert_eq!(design.stage, StageKind::Design);

    // vague + generate + directive + design entry + generate
    assert_eq!(e.interaction_count(&s), 5);
    assert!(clay_core::invariants::check_session(&s).is_empty());
}

#[test]
fn baseline_stage_advance_has_no_suggestions() {
    let e = engine();
    let mut s = e.create_session(SessionMode::Baseline, "sporty", 2).unwrap();
    assert!(matches!(
        block_on(e.advance_stage(&mut s, &ArtifactId::nth(0))),
        Err(WorkflowError::Precondition(_))
    ));
    block_on(e.submit_vague_prompt(&mut s, "sporty look")).unwrap();
    assert!(block_on(e.advance_stage(&mut s, &ArtifactId::nth(0))).unwrap().is_none());
    assert_eq!((s.stage.kind(), s.phase), (StageKind::Design, Phase::VaguePrompt));
    assert!(s.hierarchy.is_none());
}

#[test]
fn same_prompt_and_seed_give_identical_bytes() {
    let run = || {
        let e = engine();
        let mut s = e.create_session(SessionMode::Clay, "chic", 77).unwrap();
        block_on(e.submit_vague_prompt(&mut s, "parisian chic")).unwrap();
        e.refine_prompt(&mut s, &["minimal".into()], Some("monochrome")).unwrap();
        let a = block_on(e.generate_combination(&mut s)).unwrap();
        let bytes = e.blobs().get(&a.image_refs[0]).unwrap().unwrap();
        (a.image_refs, bytes)
    };
    assert_eq!(run(), run());
}

#[test]
fn composition_reduce_and_clamp() {
    let e = engine();
    let mut s = e.create_session(SessionMode::Clay, "futuristic", 3).unwrap();
    block_on(e.submit_vague_prompt(&mut s, "futuristic")).unwrap();
    e.refine_prompt(&mut s, &["chrome".into()], None).unwrap();
    block_on(e.generate_combination(&mut s)).unwrap();
    let counts: Vec<(u32, bool)> = (0..4)
        .map(|_| {
            let o = block_on(e.modify_composition(&mut s, Directive::ReduceTileCount)).unwrap();
            (o.composition.count(), o.clamped)
        })
        .collect();
    assert_eq!(counts, [(4, false), (2, false), (1, true), (1, true)]);
}

#[test]
fn session_json_round_trips() {
    let e = engine();
    let mut s = e.create_session(SessionMode::Clay, "hip-hop", 1).unwrap();
    block_on(e.submit_vague_prompt(&mut s, "y2k hip-hop")).unwrap();
    let json = serde_json::to_string(&s).unwrap();
    let back: clay_core::Session = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s);
}
