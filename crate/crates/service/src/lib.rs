//! Runnable system around the workflow engine: HTTP API, filesystem store,
//! scripted study sessions, log analysis and the `clay` command line.

pub mod analyze;
pub mod api;
pub mod config;
pub mod error;
pub mod policy;
pub mod store;

use std::future::Future;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clay_core::taxonomy::STUDY_STYLES;
use clay_core::{Engine, Session};
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tokio::net::TcpListener;

pub use api::{router, AppState};
pub use config::{Overrides, ServiceConfig};
pub use error::{ApiCode, ApiError, CliError, StoreError};
pub use policy::{run_scripted_session, Policy, PolicyParams};
pub use store::FsStore;

/// Opens the store and builds the engine and router for `config`.
pub fn build_app(config: &ServiceConfig, random_style: bool) -> Result<(axum::Router, Arc<AppState>), CliError> {
    let store = Arc::new(FsStore::open(&config.data_dir)?);
    let engine = Arc::new(config.build_engine(store.clone())?);
    let state = Arc::new(AppState::new(engine, store, random_style));
    Ok((router(state.clone()), state))
}

/// Serves until `shutdown` resolves. Every acknowledged write is already
/// synced, so shutdown only has to stop accepting requests.
pub async fn serve_with_shutdown(
    config: &ServiceConfig,
    random_style: bool,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), CliError> {
    let (app, _state) = build_app(config, random_style)?;
    let listener = TcpListener::bind(&config.bind)
        .await
        .map_err(|e| CliError::Config(format!("cannot listen on {}: {e}", config.bind)))?;
    let addr = listener.local_addr().map_err(|e| CliError::Config(e.to_string()))?;
    tracing::info!(%addr, data_dir = %config.data_dir.display(), "serving");
    println!("listening on http://{addr}");
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| CliError::Io { path: config.bind.clone(), source: e })?;
    tracing::info!("stopped");
    Ok(())
}

/// Style used for the `index`-th simulated session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StyleChoice {
    Fixed(String),
    /// Uniform over the six study styles, seeded per session.
    Random,
}

impl StyleChoice {
    pub fn pick(&self, seed: u64) -> String {
        match self {
            StyleChoice::Fixed(s) => s.clone(),
            StyleChoice::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5171e);
                STUDY_STYLES.choose(&mut rng).expect("styles").to_string()
            }
        }
    }
}

/// Runs `count` sessions with seeds `base_seed..` and writes each log to
/// `out/<session id>.jsonl`.
pub async fn simulate(
    engine: &Engine,
    policy: Policy,
    params: PolicyParams,
    count: usize,
    base_seed: u64,
    style: &StyleChoice,
    out: &Path,
) -> Result<Vec<(PathBuf, Session)>, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io { path: out.display().to_string(), source: e })?;
    let mut written = Vec::with_capacity(count);
    for i in 0..count {
        let seed = base_seed.wrapping_add(i as u64);
        let s = run_scripted_session(engine, policy, params, None, &style.pick(seed), seed).await?;
        let path = out.join(format!("{}.jsonl", s.id.0));
        std::fs::write(&path, engine.log_of(&s).to_jsonl())
            .map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
        written.push((path, s));
    }
    Ok(written)
}
