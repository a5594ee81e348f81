use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine as _;
use clay_core::backends::prompts::build_extraction_request;
use clay_core::backends::{
    BackendConfig, BackendKind, ChatBackend, ChatImage, ChatPipeline, ImageBackend, ImageRequest, RemoteChat,
    RemoteImage,
};
use clay_core::config::{CaptionShape, HierarchyShape};
use clay_core::BackendError;
use serde_json::{json, Value};
use tokio::sync::Semaphore;

#[derive(Clone, Default)]
struct Server {
    calls: Arc<AtomicUsize>,
    /// Number of leading calls answered with this status.
    fail_first: usize,
    fail_status: u16,
    bodies: Arc<Mutex<Vec<Value>>>,
    auth: Arc<Mutex<Vec<String>>>,
    reply: Arc<Mutex<String>>,
}

async fn chat(State(s): State<Server>, headers: HeaderMap, Json(body): Json<Value>) -> (StatusCode, String) {
    let n = s.calls.fetch_add(1, Ordering::SeqCst);
    s.bodies.lock().unwrap().push(body);
    if let Some(a) = headers.get("authorization") {
        s.auth.lock().unwrap().push(a.to_str().unwrap().to_string());
    }
    if n < s.fail_first {
        return (StatusCode::from_u16(s.fail_status).unwrap(), "upstream unhappy".into());
    }
    let content = s.reply.lock().unwrap().clone();
    (StatusCode::OK, json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string())
}

async fn images(State(s): State<Server>, Json(body): Json<Value>) -> Json<Value> {
    s.bodies.lock().unwrap().push(body.clone());
    let n = body["n"].as_u64().unwrap() as usize;
    let port = s.reply.lock().unwrap().clone();
    let data: Vec<Value> = (0..n)
        .map(|i| {
            if i % 2 == 0 {
                json!({"b64_json": base64::engine::general_purpose::STANDARD.encode(format!("image-{i}"))})
            } else {
                json!({"url": format!("http://{port}/files/{i}")})
            }
        })
        .collect();
    Json(json!({"data": data}))
}

async fn file() -> &'static str {
    "fetched-bytes"
}

async fn start(state: Server) -> String {
    let app = Router::new()
        .route("/v1/chat/completions", post(chat))
        .route("/v1/images/generations", post(images))
        .route("/files/{i}", get(file))
        .with_state(state);
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr.to_string()
}

fn config(kind: BackendKind, addr: &str, var: &str) -> BackendConfig {
    std::env::set_var(var, "secret-token");
    BackendConfig {
        model_name: Some("test-model".into()),
        backoff_ms: 1,
        ..BackendConfig::remote(kind, &format!("http://{addr}/v1"), var)
    }
}

fn limiter() -> Arc<Semaphore> {
    Arc::new(Semaphore::new(4))
}

#[tokio::test]
async fn missing_credential_is_a_configuration_error() {
    let cfg = BackendConfig::remote(BackendKind::RemoteChat, "http://127.0.0.1:9", "CLAY_TEST_UNSET_VARIABLE");
    assert!(matches!(RemoteChat::from_config(&cfg, limiter()), Err(BackendError::Configuration(_))));
    let cfg = BackendConfig::remote(BackendKind::RemoteImage, "http://127.0.0.1:9", "CLAY_TEST_UNSET_VARIABLE");
    assert!(matches!(RemoteImage::from_config(&cfg, limiter()), Err(BackendError::Configuration(_))));
}

#[tokio::test]
async fn chat_retries_server_errors_then_succeeds() {
    let state = Server { fail_first: 2, fail_status: 503, ..Server::default() };
    *state.reply.lock().unwrap() = r#"{"styles": ["vintage"], "moods": ["cozy"]}"#.into();
    let addr = start(state.clone()).await;
    let chat = RemoteChat::from_config(&config(BackendKind::RemoteChat, &addr, "CLAY_TEST_KEY_A"), limiter()).unwrap();
    let pipeline = ChatPipeline::new(Arc::new(chat), HierarchyShape::default(), CaptionShape::default());
    let lists = pipeline.extract_keywords("a cozy vintage look", None, 4).await.unwrap();
    assert_eq!(lists.styles, ["vintage"]);
    assert_eq!(state.calls.load(Ordering::SeqCst), 3);
    assert!(state.auth.lock().unwrap().iter().all(|a| a == "Bearer secret-token"));

    let body = state.bodies.lock().unwrap().last().unwrap().clone();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["seed"], 4);
    let messages = body["messages"].as_array().unwrap();
    assert_eq!(messages[0]["role"], "system");
    // system + exemplar pairs + user
    let exemplars = build_extraction_request("x", None).unwrap().exemplars.len();
    assert_eq!(messages.len(), 2 + 2 * exemplars);
    assert_eq!(messages.last().unwrap()["content"], "a cozy vintage look");
}

#[tokio::test]
async fn chat_gives_up_after_retry_budget() {
    let state = Server { fail_first: usize::MAX, fail_status: 500, ..Server::default() };
    let addr = start(state.clone()).await;
    let mut cfg = config(BackendKind::RemoteChat, &addr, "CLAY_TEST_KEY_B");
    cfg.max_retries = 2;
    let chat = RemoteChat::from_config(&cfg, limiter()).unwrap();
    let err = chat.complete(&build_extraction_request("vintage", None).unwrap()).await.unwrap_err();
    match &err {
        BackendError::Transport { status, attempts, body_excerpt } => {
            assert_eq!((*status, *attempts), (Some(500), 3));
            assert_eq!(body_excerpt, "upstream unhappy");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.retriable());
    assert_eq!(state.calls.load(Ordering::SeqCst), 3);
}

#[tokio::test]
async fn client_errors_are_not_retried() {
    let state = Server { fail_first: usize::MAX, fail_status: 400, ..Server::default() };
    let addr = start(state.clone()).await;
    let chat = RemoteChat::from_config(&config(BackendKind::RemoteChat, &addr, "CLAY_TEST_KEY_C"), limiter()).unwrap();
    let err = chat.complete(&build_extraction_request("vintage", None).unwrap()).await.unwrap_err();
    assert!(matches!(err, BackendError::Transport { status: Some(400), attempts: 1, .. }));
    assert!(!err.retriable());
    assert_eq!(state.calls.load(Ordering::SeqCst), 1);
}

#[tokio::test]
async fn malformed_reply_is_a_parse_error_after_one_retry() {
    let state = Server::default();
    *state.reply.lock().unwrap() = "this is not json at all".into();
    let addr = start(state.clone()).await;
    let chat = RemoteChat::from_config(&config(BackendKind::RemoteChat, &addr, "CLAY_TEST_KEY_D"), limiter()).unwrap();
    let pipeline = ChatPipeline::new(Arc::new(chat), HierarchyShape::default(), CaptionShape::default());
    let err = pipeline.extract_keywords("vintage", None, 0).await.unwrap_err();
    assert!(matches!(err, BackendError::Parse { .. }));
    assert_eq!(state.calls.load(Ordering::SeqCst), 2);
}

#[tokio::test]
async fn vision_body_carries_a_data_url() {
    let addr = start(Server::default()).await;
    let mut cfg = config(BackendKind::RemoteChat, &addr, "CLAY_TEST_KEY_E");
    let mut req = build_extraction_request("caption this", None).unwrap();
    req.image = Some(ChatImage { mime: "image/png".into(), data_base64: "AAAA".into() });

    let plain = RemoteChat::from_config(&cfg, limiter()).unwrap();
    assert!(!plain.accepts_images());
    assert_eq!(plain.request_body(&req)["messages"].as_array().unwrap().last().unwrap()["content"], "caption this");

    cfg.vision = true;
    let vision = RemoteChat::from_config(&cfg, limiter()).unwrap();
    assert!(vision.accepts_images());
    let body = vision.request_body(&req);
    let user = &body["messages"].as_array().unwrap().last().unwrap()["content"];
    assert_eq!(user[0]["text"], "caption this");
    assert_eq!(user[1]["image_url"]["url"], "data:image/png;base64,AAAA");
}

#[tokio::test]
async fn images_accept_base64_and_urls() {
    let state = Server::default();
    let addr = start(state.clone()).await;
    *state.reply.lock().unwrap() = addr.clone();
    let backend =
        RemoteImage::from_config(&config(BackendKind::RemoteImage, &addr, "CLAY_TEST_KEY_F"), limiter()).unwrap();
    let req = ImageRequest { prompt_text: "4 fashion design variants".into(), count: 3, size_hint: (512, 256), seed: None, tiles: None };
    let out = backend.generate(&req).await.unwrap();
    assert_eq!(out, [b"image-0".to_vec(), b"fetched-bytes".to_vec(), b"image-2".to_vec()]);
    let body = state.bodies.lock().unwrap()[0].clone();
    assert_eq!(body["size"], "512x256");
    assert_eq!(body["n"], 3);
    assert_eq!(backend.backend_id(), "remote-image:test-model");
}
