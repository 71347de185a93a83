//! HTTP service: sessions, prompting, direct edits, scene JSON and rendered
//! PNG frames. Every JSON body carries the session's scene `revision`; PNG
//! responses carry it in the `x-scene-revision` header.

mod api;
mod config;
mod edit;
mod state;

pub use api::{router, RenderQuery, REVISION_HEADER};
pub use config::{ServiceConfig, ENV_CATALOG, ENV_LISTEN, ENV_SCENE, ENV_SESSION_TTL};
pub use edit::EditRequest;
pub use state::{AppState, SessionRecord};

use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Scene(#[from] twinsim_core::scene::SceneError),
    #[error("backend: {0}")]
    Backend(#[from] twinsim_core::orchestrator::BackendError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Binds `cfg.listen` and serves until the process ends. Idle sessions are
/// swept every minute (or every ttl/4 when shorter).
pub async fn serve(cfg: &ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::from_config(cfg)?);
    let listener = tokio::net::TcpListener::bind(&cfg.listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    spawn_sweeper(state.clone());
    axum::serve(listener, router(state)).await?;
    Ok(())
}

pub fn spawn_sweeper(state: Arc<AppState>) -> tokio::task::JoinHandle<()> {
    let every = (state.ttl() / 4).clamp(std::time::Duration::from_millis(10), std::time::Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            let n = state.evict_expired();
            if n > 0 {
                log::info!("expired {n} idle session(s)");
            }
        }
    })
}
