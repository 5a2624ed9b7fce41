//! HTTP service for framecue projects.
//!
//! Each registered bundle gets a project session. Mutating requests may
//! carry `expected_revision`; a stale value is refused with `409 conflict`
//! and changes nothing. Commands run as jobs: outside live mode the job is
//! already finished in the `POST` response, in live mode clients poll
//! `GET /jobs/{id}`.

pub mod config;
pub mod error;
pub mod routes;
pub mod state;
pub mod wire;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Request, State};
use axum::http::header;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use thiserror::Error;
use tokio::net::TcpListener;

pub use config::{ConfigError, ServerConfig};
pub use error::{ApiError, ErrorCode};
pub use state::{AppState, SharedState};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("provider setup failed: {0}")]
    Provider(#[from] framecue::ProviderError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Validates the config and builds the shared state.
pub fn build_state(config: ServerConfig) -> Result<SharedState, ServeError> {
    config.validate()?;
    let providers = config.provider.build()?;
    Ok(Arc::new(AppState::new(config, providers)))
}

pub fn router(state: SharedState) -> Router {
    let api = Router::new()
        .route("/projects", post(routes::create_project))
        .route("/projects/{id}", get(routes::get_project))
        .route("/projects/{id}/layers", post(routes::add_layer))
        .route("/projects/{id}/commands", post(routes::submit_command))
        .route("/projects/{id}/timeline", get(routes::timeline))
        .route("/projects/{id}/transcript", get(routes::transcript))
        .route("/projects/{id}/undo", post(routes::undo))
        .route("/projects/{id}/redo", post(routes::redo))
        .route("/projects/{id}/export", get(routes::export))
        .route("/jobs/{id}", get(routes::get_job))
        .route("/commands/{id}", get(routes::get_command))
        .route("/commands/{id}/search-more", post(routes::search_more))
        .route("/edits/{id}", axum::routing::patch(routes::patch_edit))
        .route("/edits/{id}/accept", post(routes::accept_edit))
        .route("/edits/{id}/reject", post(routes::reject_edit))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token))
        .fallback(|| async { ApiError::new(ErrorCode::NotFound, "no such endpoint") });
    Router::new()
        .route("/health", get(routes::health))
        .merge(api)
        .with_state(state)
}

async fn require_token(State(st): State<SharedState>, req: Request, next: Next) -> Response {
    if let Some(token) = &st.config.auth_token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return ApiError::new(ErrorCode::Unauthorized, "missing or wrong bearer token")
                .into_response();
        }
    }
    next.run(req).await
}

/// Binds the configured address.
pub async fn bind(config: &ServerConfig) -> Result<TcpListener, ServeError> {
    TcpListener::bind(&config.bind)
        .await
        .map_err(|source| ServeError::Bind {
            addr: config.bind.clone(),
            source,
        })
}

/// Runs until `shutdown` resolves.
pub async fn serve_with_shutdown(
    config: ServerConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServeError> {
    let state = build_state(config)?;
    let listener = bind(&state.config).await?;
    let addr: SocketAddr = listener.local_addr()?;
    tracing::info!(%addr, mode = ?state.providers.mode(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

/// Runs until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServeError> {
    serve_with_shutdown(config, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
