//! HTTP/JSON service for the plan tutor.

pub mod config;
pub mod error;
pub mod routes;
pub mod tutor;

use std::net::SocketAddr;
use std::sync::Arc;

use plantutor_core::env::{BundleError, EnvRegistry};
use plantutor_core::llm::LlmClient;
use plantutor_core::session::{SessionError, SessionStore};
use thiserror::Error;
use tower_http::services::ServeDir;

pub use config::{ConfigError, ServerConfig};
pub use error::ApiError;
pub use routes::router;
pub use tutor::{Tutor, TutorSettings};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("loading environments: {0}")]
    Bundle(#[from] BundleError),
    #[error("opening session store: {0}")]
    Store(#[from] SessionError),
    #[error("{0}")]
    Setup(#[from] ApiError),
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Loads environments and sessions as configured.
pub fn build_tutor(config: &ServerConfig) -> Result<Tutor, ServeError> {
    let registry = EnvRegistry::load_dir(&config.env_dir)?;
    let store = SessionStore::open(&config.data_dir)?;
    let settings = TutorSettings {
        max_depth: config.max_depth,
        detailed_explanations: config.detailed_explanations,
        task_seed: config.task_seed,
        hint: config.hint.clone(),
    };
    Ok(Tutor::new(
        registry,
        store,
        settings,
        Arc::new(LlmClient::new(config.llm.clone())),
    )?)
}

/// The API router, plus the UI directory as a fallback when configured.
pub fn app(tutor: Arc<Tutor>, config: &ServerConfig) -> axum::Router {
    let api = router(tutor);
    match &config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds, prints a readiness line and serves until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServeError> {
    let tutor = {
        let config = config.clone();
        tokio::task::spawn_blocking(move || build_tutor(&config))
            .await
            .map_err(|e| ServeError::Io(std::io::Error::other(e)))??
    };
    let tutor = Arc::new(tutor);
    let listener = tokio::net::TcpListener::bind(&config.listen)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.listen.clone(),
            source,
        })?;
    let addr: SocketAddr = listener.local_addr()?;
    println!("plantutor listening on http://{addr}");
    axum::serve(listener, app(Arc::clone(&tutor), &config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    // the blocking HTTP client inside must not be dropped on an async thread
    tokio::task::spawn_blocking(move || drop(tutor)).await.ok();
    Ok(())
}
