//! Interaction events and the line-delimited session log.
//!
//! A log file starts with one header line describing the session, followed
//! by one JSON record per event. Every record carries the digest of its
//! payload, so a replayed session can be compared record by record.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use crate::blob::{sha256_hex, ContentRef};
use crate::hierarchy::HierarchyPath;
use crate::keyword::Keyword;
use crate::session::{ArtifactId, CompositionParams, Directive, SessionId, SessionMode};

pub const LOG_FORMAT: &str = "clay-log/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    VaguePromptSubmitted,
    HierarchyViewed,
    KeywordSelected,
    PromptRefined,
    GenerationRequested,
    CompositionDirective,
    StageAdvanced,
}

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::VaguePromptSubmitted,
        EventKind::HierarchyViewed,
        EventKind::KeywordSelected,
        EventKind::PromptRefined,
        EventKind::GenerationRequested,
        EventKind::CompositionDirective,
        EventKind::StageAdvanced,
    ];

    /// Only backend-generation triggers count as interactions.
    pub fn counts_as_interaction(self) -> bool {
        matches!(
            self,
            EventKind::VaguePromptSubmitted
                | EventKind::GenerationRequested
                | EventKind::CompositionDirective
        )
    }
}

/// What started a vague-prompt round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum VagueSource {
    User,
    /// The design stage opens with the selected moodboard as its query.
    Moodboard { moodboard_id: ArtifactId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum EventPayload {
    VaguePromptSubmitted {
        text: String,
        #[serde(flatten)]
        source: VagueSource,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hierarchy_digest: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        artifact_id: Option<ArtifactId>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        image_refs: Vec<ContentRef>,
    },
    HierarchyViewed {
        hierarchy_digest: String,
    },
    KeywordSelected {
        paths: Vec<HierarchyPath>,
        new_keywords: Vec<String>,
        draft: Vec<Keyword>,
    },
    PromptRefined {
        keywords: Vec<Keyword>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        free_text: Option<String>,
        revision: u32,
        specificity: f64,
    },
    GenerationRequested {
        artifact_id: ArtifactId,
        composition: CompositionParams,
        image_refs: Vec<ContentRef>,
    },
    CompositionDirective {
        directive: Directive,
        clamped: bool,
        artifact_id: ArtifactId,
        composition: CompositionParams,
        image_refs: Vec<ContentRef>,
    },
    StageAdvanced {
        artifact_id: ArtifactId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hierarchy_digest: Option<String>,
    },
}

impl EventPayload {
    pub fn kind(&self) -> EventKind {
        match self {
            EventPayload::VaguePromptSubmitted { .. } => EventKind::VaguePromptSubmitted,
            EventPayload::HierarchyViewed { .. } => EventKind::HierarchyViewed,
            EventPayload::KeywordSelected { .. } => EventKind::KeywordSelected,
            EventPayload::PromptRefined { .. } => EventKind::PromptRefined,
            EventPayload::GenerationRequested { .. } => EventKind::GenerationRequested,
            EventPayload::CompositionDirective { .. } => EventKind::CompositionDirective,
            EventPayload::StageAdvanced { .. } => EventKind::StageAdvanced,
        }
    }

    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("payload serializes").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub timestamp: DateTime<Utc>,
    pub session_id: SessionId,
    pub kind: EventKind,
    pub payload_digest: String,
    pub counts_as_interaction: bool,
    pub payload: EventPayload,
}

impl InteractionEvent {
    pub fn new(session_id: SessionId, timestamp: DateTime<Utc>, payload: EventPayload) -> Self {
        let kind = payload.kind();
        InteractionEvent {
            timestamp,
            session_id,
            kind,
            payload_digest: payload.digest(),
            counts_as_interaction: kind.counts_as_interaction(),
            payload,
        }
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }

    /// Checks that the stored kind, digest and flag agree with the payload.
    pub fn verify(&self) -> Result<(), String> {
        if self.payload.kind() != self.kind {
            return Err(format!("kind {:?} does not match payload {:?}", self.kind, self.payload.kind()));
        }
        if self.payload.digest() != self.payload_digest {
            return Err("payload digest mismatch".into());
        }
        if self.counts_as_interaction != self.kind.counts_as_interaction() {
            return Err(format!("wrong interaction flag for {:?}", self.kind));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub format: String,
    pub session_id: SessionId,
    pub mode: SessionMode,
    pub style_seed: String,
    pub rng_seed: u64,
    pub created_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub taxonomy_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: SessionHeader,
    pub events: Vec<InteractionEvent>,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("log is empty")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SessionLog {
    pub fn interaction_count(&self) -> usize {
        crate::session::interaction_count(&self.events)
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{}", serde_json::to_string(&self.header)?)?;
        for e in &self.events {
            writeln!(w, "{}", serde_json::to_string(e)?)?;
        }
        w.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    /// Reads a log; errors name the 1-based line. Blank lines are skipped.
    pub fn read_from(r: impl BufRead) -> Result<Self, LogError> {
        let mut header: Option<SessionHeader> = None;
        let mut events = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let n = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| LogError::Line { line: n, message };
            match &header {
                None => {
                    let h: SessionHeader =
                        serde_json::from_str(&line).map_err(|e| bad(format!("bad header: {e}")))?;
                    if h.format != LOG_FORMAT {
                        return Err(bad(format!("unsupported log format {:?}", h.format)));
                    }
                    header = Some(h);
                }
                Some(h) => {
                    let e: InteractionEvent =
                        serde_json::from_str(&line).map_err(|e| bad(format!("bad event: {e}")))?;
                    e.verify().map_err(bad)?;
                    if e.session_id != h.session_id {
                        return Err(bad(format!("event belongs to session {}", e.session_id)));
                    }
                    if let Some(prev) = events.last().map(|p: &InteractionEvent| p.timestamp) {
                        if e.timestamp < prev {
                            return Err(bad("timestamp goes backwards".into()));
                        }
                    }
                    events.push(e);
                }
            }
        }
        let header = header.ok_or(LogError::Empty)?;
        Ok(SessionLog { header, events })
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        Self::read_from(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(s: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_700_000_000 + s, 0).unwrap()
    }

    fn sample_log() -> SessionLog {
        let id = SessionId("s-1".into());
        let events = vec![
            InteractionEvent::new(
                id.clone(),
                ts(1),
                EventPayload::VaguePromptSubmitted {
                    text: "vintage".into(),
                    source: VagueSource::User,
                    hierarchy_digest: Some("ab".into()),
                    artifact_id: None,
                    image_refs: vec![],
                },
            ),
            InteractionEvent::new(
                id.clone(),
                ts(2),
                EventPayload::KeywordSelected {
                    paths: vec![HierarchyPath::new([0, 1])],
                    new_keywords: vec!["active skirt".into()],
                    draft: vec![Keyword::user("active skirt")],
                },
            ),
        ];
        SessionLog {
            header: SessionHeader {
                format: LOG_FORMAT.into(),
                session_id: id,
                mode: SessionMode::Clay,
                style_seed: "vintage".into(),
                rng_seed: 7,
                created_at: ts(0),
                taxonomy_digest: None,
            },
            events,
        }
    }

    #[test]
    fn counting_rule() {
        let counted: Vec<_> =
            EventKind::ALL.iter().copied().filter(|k| k.counts_as_interaction()).collect();
        assert_eq!(
            counted,
            [
                EventKind::VaguePromptSubmitted,
                EventKind::GenerationRequested,
                EventKind::CompositionDirective
            ]
        );
    }

    #[test]
    fn jsonl_round_trip() {
        let log = sample_log();
        let text = log.to_jsonl();
        assert_eq!(text.lines().count(), 3);
        let back = SessionLog::parse(&text).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.interaction_count(), 1);
    }

    #[test]
    fn wire_record_has_required_fields() {
        let log = sample_log();
        let line = log.to_jsonl().lines().nth(1).unwrap().to_string();
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        for f in ["timestamp", "session_id", "kind", "payload_digest", "counts_as_interaction"] {
            assert!(v.get(f).is_some(), "{f}");
        }
        assert_eq!(v["kind"], "VaguePromptSubmitted");
        assert!(v["timestamp"].as_str().unwrap().ends_with('Z'));
        assert_eq!(v["payload_digest"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn corrupt_line_is_reported_with_number() {
        let mut text = sample_log().to_jsonl();
        text.push_str("{not json\n");
        match SessionLog::parse(&text) {
            Err(LogError::Line { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tampered_payload_is_rejected() {
        let text = sample_log().to_jsonl().replace("\"text\":\"vintage\"", "\"text\":\"chic\"");
        assert!(matches!(SessionLog::parse(&text), Err(LogError::Line { line: 2, .. })));
    }

    #[test]
    fn empty_log_is_an_error() {
        assert!(matches!(SessionLog::parse("\n"), Err(LogError::Empty)));
    }
}
