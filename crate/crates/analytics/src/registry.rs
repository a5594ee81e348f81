//! Fixed catalog of the study's survey metrics.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Instrument {
    UserExperience,
    AiExperience,
    Interaction,
    NasaTlx,
    CreativitySupportIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MetricDef {
    pub id: &'static str,
    pub label: &'static str,
    pub instrument: Instrument,
    /// Row-group heading, when the metric is rendered inside a group.
    pub group: Option<&'static str>,
}

const AI_GROUP: &str = "participants' self-perceived experience using the AI system";
const TLX_GROUP: &str = "NASA-TLX";
const CSI_GROUP: &str = "Creativity Support Index";

const fn metric(
    id: &'static str,
    label: &'static str,
    instrument: Instrument,
    group: Option<&'static str>,
) -> MetricDef {
    MetricDef { id, label, instrument, group }
}

use Instrument::*;

pub const METRICS: &[MetricDef] = &[
    metric("effective", "Effective", UserExperience, None),
    metric("productive", "Productive", UserExperience, None),
    metric("useful", "Useful", UserExperience, None),
    metric("control_activities", "Control Activities", UserExperience, None),
    metric("accomplish_easier", "Accomplish Easier", UserExperience, None),
    metric("save_time", "Save Time", UserExperience, None),
    metric("meet_needs", "Meet Needs", UserExperience, None),
    metric("de_expected", "De Expected", UserExperience, None),
    metric("match_goal", "Match Goal", AiExperience, Some(AI_GROUP)),
    metric("think_through", "Think Through", AiExperience, Some(AI_GROUP)),
    metric("transparent", "Transparent", AiExperience, Some(AI_GROUP)),
    metric("controllable", "Controllable", AiExperience, Some(AI_GROUP)),
    metric("collaborative", "Collaborative", AiExperience, Some(AI_GROUP)),
    metric("interaction_count", "Interaction Count", Interaction, None),
    metric("tlx_score", "Score", NasaTlx, Some(TLX_GROUP)),
    metric("tlx_mental", "Mental", NasaTlx, Some(TLX_GROUP)),
    metric("tlx_physical", "Physical", NasaTlx, Some(TLX_GROUP)),
    metric("tlx_temporal", "Temporal", NasaTlx, Some(TLX_GROUP)),
    metric("tlx_effort", "Effort", NasaTlx, Some(TLX_GROUP)),
    metric("tlx_performance", "Performance", NasaTlx, Some(TLX_GROUP)),
    metric("tlx_frustration", "Frustration", NasaTlx, Some(TLX_GROUP)),
    metric("csi_score", "Score", CreativitySupportIndex, Some(CSI_GROUP)),
    metric("csi_enjoyment", "Enjoyment", CreativitySupportIndex, Some(CSI_GROUP)),
    metric("csi_exploration", "Exploration", CreativitySupportIndex, Some(CSI_GROUP)),
    metric("csi_expressiveness", "Expressiveness", CreativitySupportIndex, Some(CSI_GROUP)),
    metric("csi_immersion", "Immersion", CreativitySupportIndex, Some(CSI_GROUP)),
    metric(
        "csi_results_worth_effort",
        "Results Worth Effort",
        CreativitySupportIndex,
        Some(CSI_GROUP),
    ),
    metric("csi_collaboration", "Collaboration", CreativitySupportIndex, Some(CSI_GROUP)),
];

pub fn lookup(id: &str) -> Option<&'static MetricDef> {
    METRICS.iter().find(|m| m.id == id)
}

pub fn by_instrument(instrument: Instrument) -> impl Iterator<Item = &'static MetricDef> {
    METRICS.iter().filter(move |m| m.instrument == instrument)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn ids_are_unique() {
        let ids: HashSet<_> = METRICS.iter().map(|m| m.id).collect();
        assert_eq!(ids.len(), METRICS.len());
    }

    #[test]
    fn catalog_sizes() {
        assert_eq!(by_instrument(UserExperience).count(), 8);
        assert_eq!(by_instrument(AiExperience).count(), 5);
        assert_eq!(by_instrument(NasaTlx).count(), 7);
        assert_eq!(by_instrument(CreativitySupportIndex).count(), 7);
        assert_eq!(lookup("interaction_count").unwrap().label, "Interaction Count");
        assert!(lookup("nope").is_none());
    }
}
