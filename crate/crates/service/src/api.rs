//! HTTP endpoints. Each session is guarded by its own async mutex, so
//! requests for one session run one at a time while different sessions
//! proceed concurrently.

use std::collections::HashMap;
use std::future::Future;
use std::pin::Pin;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use clay_core::events::{InteractionEvent, SessionHeader};
use clay_core::hierarchy::HierarchyPath;
use clay_core::{
    ArtifactId, CompositionParams, ContentRef, Directive, Engine, GenerationArtifact, Keyword, KeywordInput, Phase,
    RefinedPrompt, Session, SessionId, SessionMode, StageKind, StyleHierarchy, WorkflowError,
};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::error::{ApiError, StoreError};
use crate::store::FsStore;

pub struct AppState {
    pub engine: Arc<Engine>,
    pub store: Arc<FsStore>,
    /// Pick a study style when a create request omits `style_seed`.
    pub random_style: bool,
    sessions: std::sync::Mutex<HashMap<SessionId, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, store: Arc<FsStore>, random_style: bool) -> Self {
        AppState { engine, store, random_style, sessions: std::sync::Mutex::new(HashMap::new()) }
    }

    /// Returns the live handle for a session, loading it from disk on first use.
    fn handle(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let id = SessionId(id.to_string());
        let mut map = self.sessions.lock().expect("session map");
        if let Some(h) = map.get(&id) {
            return Ok(h.clone());
        }
        let record = self.store.load_session(&id).map_err(|e| match e {
            StoreError::NotFound(_) => ApiError::not_found(format!("no session {}", id.0)),
            other => other.into(),
        })?;
        let h = Arc::new(Mutex::new(record.session));
        map.insert(id, h.clone());
        Ok(h)
    }
}

/// Session state without the event and phase logs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionView {
    pub id: SessionId,
    pub mode: SessionMode,
    pub stage: StageKind,
    pub phase: Phase,
    pub style_seed: String,
    pub rng_seed: u64,
    pub created_at: DateTime<Utc>,
    pub hierarchy: Option<StyleHierarchy>,
    pub keyword_draft: Vec<Keyword>,
    pub current_prompt: Option<RefinedPrompt>,
    pub composition: CompositionParams,
    pub artifacts: Vec<GenerationArtifact>,
    pub interaction_count: usize,
    pub event_count: usize,
}

impl SessionView {
    pub fn of(s: &Session) -> Self {
        SessionView {
            id: s.id.clone(),
            mode: s.mode,
            stage: s.stage.kind(),
            phase: s.phase,
            style_seed: s.style_seed.clone(),
            rng_seed: s.rng_seed,
            created_at: s.created_at,
            hierarchy: s.hierarchy.clone(),
            keyword_draft: s.keyword_draft.clone(),
            current_prompt: s.current_prompt.clone(),
            composition: s.composition,
            artifacts: s.artifacts.clone(),
            interaction_count: s.interaction_count(),
            event_count: s.events.len(),
        }
    }
}

/// Body of every mutating call: the operation's result and the new state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub result: T,
    pub session: SessionView,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub mode: SessionMode,
    #[serde(default)]
    pub style_seed: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VaguePromptBody {
    pub text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeywordsBody {
    #[serde(default)]
    pub paths: Vec<HierarchyPath>,
    #[serde(default)]
    pub new_keywords: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefineBody {
    pub keywords: Vec<KeywordInput>,
    #[serde(default)]
    pub free_text: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompositionBody {
    pub directive: Directive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdvanceStageBody {
    pub artifact_id: ArtifactId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseBody {
    pub to: Phase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventsView {
    pub header: SessionHeader,
    pub events: Vec<InteractionEvent>,
    pub interaction_count: usize,
}

type OpFuture<'a, T> = Pin<Box<dyn Future<Output = Result<T, WorkflowError>> + Send + 'a>>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::validation(e.body_text()))
}

/// Runs one operation under the session lock and commits the result. A
/// failed operation or a failed commit leaves the session as it was.
async fn mutate<T, F>(st: &AppState, id: &str, op: F) -> Result<Json<Envelope<T>>, ApiError>
where
    F: for<'a> FnOnce(&'a Engine, &'a mut Session) -> OpFuture<'a, T>,
{
    let handle = st.handle(id)?;
    let mut s = handle.lock().await;
    let before = s.clone();
    let result = op(&st.engine, &mut s).await;
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            *s = before;
            return Err(e.into());
        }
    };
    if *s != before {
        if let Err(e) = st.store.save_session(&st.engine.header(&s), &s) {
            tracing::error!(session = %s.id.0, error = %e, "commit failed; rolling back");
            *s = before;
            return Err(e.into());
        }
    }
    Ok(Json(Envelope { result, session: SessionView::of(&s) }))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok"}))
}

async fn create_session(
    State(st): State<Arc<AppState>>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req = body(payload)?;
    let seed = req.seed.unwrap_or(0);
    let style = match req.style_seed {
        Some(s) => s,
        None if st.random_style => crate::StyleChoice::Random.pick(seed),
        None => return Err(ApiError::validation("style_seed is required")),
    };
    // Ids are derived from a per-process counter; skip ones already on disk.
    let session = loop {
        let s = st.engine.create_session(req.mode, &style, seed)?;
        let taken = st.store.session_exists(&s.id) || st.sessions.lock().expect("session map").contains_key(&s.id);
        if !taken {
            break s;
        }
    };
    st.store.save_session(&st.engine.header(&session), &session)?;
    let view = SessionView::of(&session);
    st.sessions.lock().expect("session map").insert(session.id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let handle = st.handle(&id)?;
    let s = handle.lock().await;
    Ok(Json(SessionView::of(&s)))
}

async fn vague_prompt(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<VaguePromptBody>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let req = body(payload)?;
    mutate(&st, &id, move |e, s| Box::pin(async move { e.submit_vague_prompt(s, &req.text).await })).await
}

async fn hierarchy(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    mutate(&st, &id, |e, s| Box::pin(async move { e.view_hierarchy(s) })).await
}

async fn keywords(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<KeywordsBody>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let req = body(payload)?;
    mutate(&st, &id, move |e, s| Box::pin(async move { e.select_keywords(s, &req.paths, &req.new_keywords) })).await
}

async fn refine(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<RefineBody>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let req = body(payload)?;
    mutate(&st, &id, move |e, s| {
        Box::pin(async move { e.refine_prompt(s, &req.keywords, req.free_text.as_deref()) })
    })
    .await
}

async fn generate(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    mutate(&st, &id, |e, s| Box::pin(e.generate_combination(s))).await
}

async fn composition(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<CompositionBody>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let req = body(payload)?;
    mutate(&st, &id, move |e, s| Box::pin(e.modify_composition(s, req.directive))).await
}

async fn advance_stage(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<AdvanceStageBody>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let req = body(payload)?;
    mutate(&st, &id, move |e, s| Box::pin(async move { e.advance_stage(s, &req.artifact_id).await })).await
}

async fn advance_phase(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Result<Json<PhaseBody>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let req = body(payload)?;
    mutate(&st, &id, move |e, s| Box::pin(async move { e.advance_phase(s, req.to) })).await
}

async fn events(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<EventsView>, ApiError> {
    let handle = st.handle(&id)?;
    let s = handle.lock().await;
    Ok(Json(EventsView {
        header: st.engine.header(&s),
        events: s.events.clone(),
        interaction_count: s.interaction_count(),
    }))
}

async fn artifact(State(st): State<Arc<AppState>>, Path(hash): Path<String>) -> Result<Response, ApiError> {
    let key = ContentRef::parse(&hash).ok_or_else(|| ApiError::validation("artifact key must be a sha-256 hex digest"))?;
    let bytes = st
        .engine
        .blobs()
        .get(&key)
        .map_err(|e| ApiError::new(crate::error::ApiCode::Configuration, e.to_string()))?
        .ok_or_else(|| ApiError::not_found(format!("no artifact {hash}")))?;
    let mime = if bytes.starts_with(b"\x89PNG") { "image/png" } else { "application/octet-stream" };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/vague-prompt", post(vague_prompt))
        .route("/sessions/{id}/hierarchy", get(hierarchy))
        .route("/sessions/{id}/keywords", post(keywords))
        .route("/sessions/{id}/refine", post(refine))
        .route("/sessions/{id}/generate", post(generate))
        .route("/sessions/{id}/composition", post(composition))
        .route("/sessions/{id}/advance-stage", post(advance_stage))
        .route("/sessions/{id}/phase", post(advance_phase))
        .route("/sessions/{id}/events", get(events))
        .route("/artifacts/{hash}", get(artifact))
        .fallback(fallback)
        .with_state(state)
}
