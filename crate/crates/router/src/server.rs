use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{validate_tau, ConfigError, RouterConfig, DEFAULT_LISTEN};
use crate::gateway::{route_request, Backends, RouteError, ScoreResponse};
use crate::log::DecisionLog;
use crate::prompt::ScoreRequest;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot open decision log {path}: {source}")]
    Log {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Io(#[from] std::io::Error),
}

/// Shared service state. Each request reads one config snapshot, so a tau
/// update never affects a request already in flight.
pub struct Gateway {
    config: RwLock<Arc<RouterConfig>>,
    backends: Backends,
    log: Option<DecisionLog>,
}

impl Gateway {
    /// Builds backends from `config` and opens its decision log.
    pub fn from_config(config: RouterConfig) -> Result<Self, ServeError> {
        config.validate()?;
        let backends = config.backends()?;
        let log = match &config.log_path {
            Some(path) => Some(DecisionLog::open(path).map_err(|source| ServeError::Log {
                path: path.display().to_string(),
                source,
            })?),
            None => None,
        };
        Ok(Self::new(config, backends, log))
    }

    /// Uses caller-supplied backends, e.g. plugins or test doubles.
    pub fn new(config: RouterConfig, backends: Backends, log: Option<DecisionLog>) -> Self {
        Self { config: RwLock::new(Arc::new(config)), backends, log }
    }

    pub fn config(&self) -> Arc<RouterConfig> {
        self.config.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn set_tau(&self, tau: f64) -> Result<Arc<RouterConfig>, ConfigError> {
        validate_tau(tau)?;
        let mut slot = self.config.write().unwrap_or_else(|e| e.into_inner());
        let mut next = RouterConfig::clone(&slot);
        next.tau = tau;
        *slot = Arc::new(next);
        Ok(slot.clone())
    }

    /// Routes one request at the current tau and logs it.
    pub async fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, RouteError> {
        let tau = self.config().tau;
        let scored = route_request(request, tau, &self.backends).await?;
        if let Some(log) = &self.log {
            if let Err(e) = log.append(&scored.entry) {
                tracing::error!(path = %log.path().display(), error = %e, "decision log write failed");
            }
        }
        Ok(scored.response)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TauUpdate {
    pub tau: f64,
}

/// HTTP routes over a shared [`Gateway`].
pub fn app(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/score", post(score))
        .route("/v1/config", get(show_config))
        .route("/v1/config/tau", put(update_tau))
        .with_state(gateway)
}

async fn healthz(State(g): State<Arc<Gateway>>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "tau": g.config().tau }))
}

async fn show_config(State(g): State<Arc<Gateway>>) -> Json<RouterConfig> {
    Json(RouterConfig::clone(&g.config()))
}

async fn update_tau(State(g): State<Arc<Gateway>>, Json(update): Json<TauUpdate>) -> Response {
    match g.set_tau(update.tau) {
        Ok(config) => {
            tracing::info!(tau = config.tau, "tau updated");
            Json(RouterConfig::clone(&config)).into_response()
        }
        Err(e) => (StatusCode::BAD_REQUEST, Json(json!({ "error": e.to_string() }))).into_response(),
    }
}

async fn score(State(g): State<Arc<Gateway>>, Json(request): Json<ScoreRequest>) -> Response {
    match g.score(&request).await {
        Ok(response) => Json(response).into_response(),
        Err(e) => {
            let status = match e {
                RouteError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
                RouteError::Pricing(_) => StatusCode::INTERNAL_SERVER_ERROR,
                _ => StatusCode::BAD_GATEWAY,
            };
            let body = json!({ "error": e.to_string(), "diagnostics": e.diagnostics() });
            (status, Json(body)).into_response()
        }
    }
}

/// Binds `config.listen` (default `127.0.0.1:8080`) and serves until the
/// process is stopped.
pub async fn serve(config: RouterConfig) -> Result<(), ServeError> {
    let addr = config.listen.clone().unwrap_or_else(|| DEFAULT_LISTEN.to_string());
    let gateway = Arc::new(Gateway::from_config(config)?);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| ServeError::Bind { addr: addr.clone(), source })?;
    let local: SocketAddr = listener.local_addr()?;
    tracing::info!(%local, tau = gateway.config().tau, "gateway listening");
    axum::serve(listener, app(gateway)).await?;
    Ok(())
}
