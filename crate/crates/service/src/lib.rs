//! Read-only HTTP API over a loaded [`Engine`].
//!
//! | route | answer |
//! |---|---|
//! | `GET /similarity?q1=<id>&q2=<id>[,<id>...][&explain=1]` | one report per `q2` id |
//! | `GET /nearest-neighbors?qnode=<id>[&k=<int>][&table=<kind>]` | `[{qnode, score, label}]` |
//! | `GET /search?q=<text>[&limit=<int>]` | `[{qnode, label, description}]` |
//!
//! Errors are `{"error": "<message>"}` with status 400 or 404.

mod config;

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use kgsim_core::{EmbeddingKind, Engine};
use serde_json::json;
use tower_http::cors::CorsLayer;

pub use config::{ConfigError, ServiceConfig, PORT_ENV};

pub const DEFAULT_SEARCH_LIMIT: usize = 10;

/// Shared, immutable state: the engine is never mutated after startup.
#[derive(Clone)]
pub struct AppState {
    engine: Arc<Engine>,
    default_k: usize,
}

impl AppState {
    pub fn new(engine: Engine, default_k: usize) -> Self {
        Self {
            engine: Arc::new(engine),
            default_k,
        }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<kgsim_core::Error> for ApiError {
    fn from(err: kgsim_core::Error) -> Self {
        let status = match err {
            kgsim_core::Error::NotFound(_) => StatusCode::NOT_FOUND,
            kgsim_core::Error::Config(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self {
            status,
            message: err.to_string(),
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(rejection: QueryRejection) -> Self {
        Self::bad_request(rejection.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type Params = Result<Query<HashMap<String, String>>, QueryRejection>;

fn required<'a>(params: &'a HashMap<String, String>, key: &str) -> Result<&'a str, ApiError> {
    params
        .get(key)
        .map(|v| v.trim())
        .filter(|v| !v.is_empty())
        .ok_or_else(|| ApiError::bad_request(format!("missing parameter {key}")))
}

fn parse_count(params: &HashMap<String, String>, key: &str, default: usize) -> Result<usize, ApiError> {
    let Some(raw) = params.get(key) else {
        return Ok(default);
    };
    let n: i64 = raw
        .trim()
        .parse()
        .map_err(|_| ApiError::bad_request(format!("{key} must be an integer, got {raw:?}")))?;
    if n <= 0 {
        return Err(ApiError::bad_request(format!("{key} must be positive, got {n}")));
    }
    Ok(n as usize)
}

async fn similarity(State(state): State<AppState>, params: Params) -> Result<Response, ApiError> {
    let Query(params) = params?;
    let primary = required(&params, "q1")?;
    let secondaries: Vec<&str> = required(&params, "q2")?
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if secondaries.is_empty() {
        return Err(ApiError::bad_request("missing parameter q2"));
    }
    let explain = matches!(params.get("explain").map(String::as_str), Some("1" | "true"));
    let reports = state.engine.compare(primary, &secondaries, explain)?;
    Ok(Json(reports).into_response())
}

async fn nearest_neighbors(State(state): State<AppState>, params: Params) -> Result<Response, ApiError> {
    let Query(params) = params?;
    let qnode = required(&params, "qnode")?;
    let k = parse_count(&params, "k", state.default_k)?;
    let table = match params.get("table") {
        Some(raw) => Some(raw.parse::<EmbeddingKind>().map_err(|e| ApiError::bad_request(e.to_string()))?),
        None => None,
    };
    let hits = state.engine.neighbors(qnode, k, table)?;
    Ok(Json(hits).into_response())
}

async fn search(State(state): State<AppState>, params: Params) -> Result<Response, ApiError> {
    let Query(params) = params?;
    let query = params.get("q").map(String::as_str).unwrap_or("");
    let limit = parse_count(&params, "limit", DEFAULT_SEARCH_LIMIT)?;
    Ok(Json(state.engine.search(query, limit)).into_response())
}

async fn not_found() -> ApiError {
    ApiError {
        status: StatusCode::NOT_FOUND,
        message: "no such route".into(),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/similarity", get(similarity))
        .route("/nearest-neighbors", get(nearest_neighbors))
        .route("/search", get(search))
        .fallback(not_found)
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Load everything, then bind and serve until ctrl-c.
pub async fn serve(config: ServiceConfig) -> Result<(), ConfigError> {
    let engine = config.load_engine()?;
    let state = AppState::new(engine, config.default_k);
    let addr = config.addr();
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| ConfigError::Invalid(format!("cannot bind {addr}: {e}")))?;
    tracing::info!("listening on http://{}", listener.local_addr().unwrap_or(addr));
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ConfigError::Invalid(format!("server error: {e}")))
}
