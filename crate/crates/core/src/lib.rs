//! Session engine for vagueness-balancing design: a vague prompt becomes a
//! keyword hierarchy, selected keywords become a refined prompt, and the
//! refined prompt becomes combination images, first for a moodboard and
//! then for garment designs.

pub mod backends;
pub mod blob;
pub mod clock;
pub mod config;
pub mod engine;
pub mod error;
pub mod events;
pub mod hierarchy;
pub mod invariants;
pub mod keyword;
pub mod replay;
pub mod session;
pub mod taxonomy;

pub use blob::{BlobStore, ContentRef, MemoryBlobStore};
pub use clock::{Clock, LogicalClock, SystemClock};
pub use config::WorkflowConfig;
pub use engine::{CompositionOutcome, Engine, VagueOutcome};
pub use error::{BackendError, WorkflowError};
pub use events::{EventKind, EventPayload, InteractionEvent, SessionHeader, SessionLog};
pub use hierarchy::{HierarchyPath, StyleHierarchy};
pub use keyword::{Keyword, KeywordInput, KeywordOrigin, RefinedPrompt};
pub use session::{
    is_permitted, ArtifactId, ArtifactKind, CompositionParams, Directive, GenerationArtifact, Phase,
    Session, SessionId, SessionMode, Stage, StageKind,
};
pub use taxonomy::Taxonomy;
