//! Scripted participants that drive the engine directly.
//!
//! Interaction counts per policy, with `k` moodboard cycles and `k2` design
//! cycles:
//!
//! | policy        | count                         | defaults       |
//! |---------------|-------------------------------|----------------|
//! | Converger     | 1 + k + 1 + k2                | k = 2, k2 = 2  |
//! | Explorer      | 1 + 2k + 1 + 1 + k2           | k = 4, k2 = 3  |
//! | BaselineFree  | prompts                       | prompts = 11   |
//! | Jenny         | 5                             |                |
//!
//! The extra 1 after the moodboard cycles is the design-stage entry, which
//! submits the chosen moodboard as the new vague query. Explorer also
//! applies one composition directive per moodboard cycle and restarts from
//! a fresh vague prompt halfway through.

use clay_core::hierarchy::{HierarchyPath, NodeLevel, StyleHierarchy};
use clay_core::{ArtifactId, Directive, Engine, KeywordInput, Phase, Session, SessionMode, WorkflowError};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

type Result<T> = std::result::Result<T, WorkflowError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Explorer,
    Converger,
    BaselineFree,
    /// The athleisure resort walkthrough.
    Jenny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub k: usize,
    pub k_design: usize,
    pub prompts: usize,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Explorer, Policy::Converger, Policy::BaselineFree, Policy::Jenny];

    pub fn mode(self) -> SessionMode {
        match self {
            Policy::BaselineFree => SessionMode::Baseline,
            _ => SessionMode::Clay,
        }
    }

    pub fn default_params(self) -> PolicyParams {
        match self {
            Policy::Explorer => PolicyParams { k: 4, k_design: 3, prompts: 0 },
            Policy::Converger => PolicyParams { k: 2, k_design: 2, prompts: 0 },
            Policy::BaselineFree => PolicyParams { k: 0, k_design: 0, prompts: 11 },
            Policy::Jenny => PolicyParams { k: 1, k_design: 1, prompts: 0 },
        }
    }

    /// The style a policy fixes, if any.
    pub fn fixed_style(self) -> Option<&'static str> {
        (self == Policy::Jenny).then_some("athleisure")
    }
}

pub const JENNY_PROMPT: &str = "create a moodboard for an athleisure casual look suitable for a resort";
pub const JENNY_SUB_STYLE: &str = "Summer Breeze Athleisure";
pub const JENNY_NEW_KEYWORD: &str = "active skirt";

fn leaves(h: &StyleHierarchy) -> Vec<HierarchyPath> {
    h.paths().into_iter().filter(|p| p.level() == Some(NodeLevel::SubElement)).collect()
}

fn pick(h: &StyleHierarchy, rng: &mut ChaCha8Rng, n: usize) -> Vec<HierarchyPath> {
    let all = leaves(h);
    all.choose_multiple(rng, n.min(all.len())).cloned().collect()
}

fn hierarchy(s: &Session) -> Result<StyleHierarchy> {
    s.hierarchy.clone().ok_or_else(|| WorkflowError::Precondition("policy expected a hierarchy".into()))
}

fn draft_inputs(s: &Session) -> Vec<KeywordInput> {
    s.keyword_draft.iter().map(KeywordInput::from).collect()
}

fn latest(s: &Session) -> Result<ArtifactId> {
    s.latest_artifact_in_stage()
        .map(|a| a.id.clone())
        .ok_or_else(|| WorkflowError::Precondition("policy expected an artifact".into()))
}

async fn clay_cycle(engine: &Engine, s: &mut Session, rng: &mut ChaCha8Rng) -> Result<()> {
    let h = hierarchy(s)?;
    engine.select_keywords(s, &pick(&h, rng, 2), &[])?;
    let inputs = draft_inputs(s);
    engine.refine_prompt(s, &inputs, None)?;
    engine.generate_combination(s).await?;
    Ok(())
}

/// Runs one scripted session. `mode`, when given, must match the policy.
pub async fn run_scripted_session(
    engine: &Engine,
    policy: Policy,
    params: PolicyParams,
    mode: Option<SessionMode>,
    style: &str,
    seed: u64,
) -> Result<Session> {
    if let Some(m) = mode {
        if m != policy.mode() {
            let msg = format!("policy {policy:?} runs in {} mode, not {m}", policy.mode());
            return Err(WorkflowError::Validation(msg));
        }
    }
    let style = policy.fixed_style().unwrap_or(style);
    let mut s = engine.create_session(policy.mode(), style, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match policy {
        Policy::Converger => {
            engine.submit_vague_prompt(&mut s, &format!("a {style} outfit")).await?;
            engine.view_hierarchy(&mut s)?;
            for _ in 0..params.k {
                clay_cycle(engine, &mut s, &mut rng).await?;
            }
            let id = latest(&s)?;
            engine.advance_stage(&mut s, &id).await?;
            for _ in 0..params.k_design {
                clay_cycle(engine, &mut s, &mut rng).await?;
            }
        }
        Policy::Explorer => {
            const DIRECTIVES: [Directive; 4] = [
                Directive::IncreaseTileCount,
                Directive::IncreaseFashionRatio,
                Directive::ReduceTileCount,
                Directive::DecreaseFashionRatio,
            ];
            engine.submit_vague_prompt(&mut s, &format!("something {style} but unexpected")).await?;
            engine.view_hierarchy(&mut s)?;
            for i in 0..params.k {
                clay_cycle(engine, &mut s, &mut rng).await?;
                engine.modify_composition(&mut s, DIRECTIVES[i % DIRECTIVES.len()]).await?;
                if i + 1 == params.k.div_ceil(2) {
                    // Back to a vague query while keeping the refined prompt in view.
                    engine.advance_phase(&mut s, Phase::PromptRefinement)?;
                    engine.submit_vague_prompt(&mut s, &format!("a bolder {style} direction")).await?;
                    engine.view_hierarchy(&mut s)?;
                }
            }
            let id = latest(&s)?;
            engine.advance_stage(&mut s, &id).await?;
            engine.view_hierarchy(&mut s)?;
            for _ in 0..params.k_design {
                clay_cycle(engine, &mut s, &mut rng).await?;
            }
        }
        Policy::BaselineFree => {
            let switch = params.prompts.div_ceil(2);
            for i in 0..params.prompts {
                if i == switch && i > 0 {
                    let id = latest(&s)?;
                    engine.advance_stage(&mut s, &id).await?;
                }
                let text = if i < switch {
                    format!("{style} fashion moodboard, idea {i}")
                } else {
                    format!("{style} garment design, variation {i}")
                };
                engine.submit_vague_prompt(&mut s, &text).await?;
            }
        }
        Policy::Jenny => run_jenny(engine, &mut s, &mut rng).await?,
    }
    Ok(s)
}

/// Paths Jenny picks in the moodboard hierarchy: the sub-style itself, then
/// one colour and one fabric under it, preferring the pastel and mesh terms.
pub fn jenny_moodboard_paths(h: &StyleHierarchy) -> Vec<HierarchyPath> {
    let Some(sub) = h.find_text(JENNY_SUB_STYLE) else {
        return Vec::new();
    };
    let mut out = vec![sub.clone()];
    for (category, preferred) in [("color", "pastel"), ("fabric", "mesh")] {
        let under: Vec<(HierarchyPath, String)> = h
            .paths()
            .into_iter()
            .filter(|p| p.0.starts_with(&sub.0) && p.level() == Some(NodeLevel::SubElement))
            .filter_map(|p| {
                let node = h.resolve(&p)?;
                let cat = node.lineage.get(2).cloned().unwrap_or_default();
                (cat == category).then_some((p, node.text))
            })
            .collect();
        let chosen = under.iter().find(|(_, t)| t.contains(preferred)).or(under.first());
        if let Some((p, _)) = chosen {
            out.push(p.clone());
        }
    }
    out
}

/// Jenny's design-stage pick: the drawstring waist when suggested, else the first leaf.
pub fn jenny_design_path(h: &StyleHierarchy) -> Option<HierarchyPath> {
    h.find_text("drawstring waist").or_else(|| leaves(h).into_iter().next())
}

async fn run_jenny(engine: &Engine, s: &mut Session, rng: &mut ChaCha8Rng) -> Result<()> {
    engine.submit_vague_prompt(s, JENNY_PROMPT).await?;
    let h = engine.view_hierarchy(s)?;
    let mut paths = jenny_moodboard_paths(&h);
    if paths.is_empty() {
        paths = pick(&h, rng, 2);
    }
    engine.select_keywords(s, &paths, &[])?;
    let inputs = draft_inputs(s);
    engine.refine_prompt(s, &inputs, None)?;
    engine.generate_combination(s).await?;
    engine.modify_composition(s, Directive::ReduceTileCount).await?;
    let id = latest(s)?;
    let h = engine
        .advance_stage(s, &id)
        .await?
        .ok_or_else(|| WorkflowError::Precondition("design stage produced no suggestions".into()))?;
    let design: Vec<HierarchyPath> = jenny_design_path(&h).into_iter().collect();
    engine.select_keywords(s, &design, &[JENNY_NEW_KEYWORD.to_string()])?;
    let inputs = draft_inputs(s);
    engine.refine_prompt(s, &inputs, None)?;
    engine.generate_combination(s).await?;
    Ok(())
}
