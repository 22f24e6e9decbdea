//! Read-only HTTP service over an ingested snapshot.
//!
//! Endpoints:
//!
//! * `GET /health`: node and edge counts.
//! * `GET /search?q&k&tcm&seed&max_walk_factor&limit`: clustered results.
//! * `GET /stats?q&mode&xmin&estimator`: degree histogram and power-law fit.
//!
//! Clustering runs on the blocking pool; the snapshot is shared immutably.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use tower_http::cors::{AllowOrigin, CorsLayer};

use linkcluster_core::search::{self, ErrorBody, HealthResponse, SearchParams, DEFAULT_LIMIT};
use linkcluster_core::{DegreeMode, Estimator, Snapshot, WalkConfig};

/// Server-chosen seeds stay below 2^53 so JSON clients keep them exact.
const MAX_DEFAULT_SEED: u64 = 1 << 53;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("failed to load snapshot: {0}")]
    Snapshot(#[from] linkcluster_core::Error),
    #[error("invalid CORS origin {0:?}")]
    Cors(String),
    #[error("server io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
pub struct AppState {
    snapshot: Arc<Snapshot>,
}

impl AppState {
    pub fn new(snapshot: Snapshot) -> Self {
        AppState {
            snapshot: Arc::new(snapshot),
        }
    }

    pub fn snapshot(&self) -> &Snapshot {
        &self.snapshot
    }
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn bad_request(kind: &str, msg: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                error: msg.into(),
                kind: kind.to_owned(),
            },
        }
    }
}

impl From<linkcluster_core::Error> for ApiError {
    fn from(e: linkcluster_core::Error) -> Self {
        use linkcluster_core::Error as E;
        let status = match e {
            E::Argument(_) | E::Domain(_) | E::InsufficientData(_) | E::Parse { .. } => {
                StatusCode::BAD_REQUEST
            }
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            body: ErrorBody {
                error: e.to_string(),
                kind: e.kind().to_owned(),
            },
        }
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::bad_request("argument", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct SearchQuery {
    pub q: Option<String>,
    pub k: Option<f64>,
    pub tcm: Option<f64>,
    pub seed: Option<u64>,
    pub max_walk_factor: Option<f64>,
    pub limit: Option<usize>,
}

#[derive(Debug, Deserialize)]
pub struct StatsQuery {
    pub q: Option<String>,
    pub mode: Option<DegreeMode>,
    pub xmin: Option<usize>,
    pub estimator: Option<Estimator>,
}

async fn health(State(state): State<AppState>) -> Json<HealthResponse> {
    let g = &state.snapshot.graph;
    Json(HealthResponse {
        status: "ok".into(),
        nodes: g.node_count(),
        edges: g.edge_count(),
    })
}

async fn search_handler(
    State(state): State<AppState>,
    query: Result<Query<SearchQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(p) = query?;
    let q = p.q.unwrap_or_default();
    if q.trim().is_empty() {
        return Err(ApiError::bad_request(
            "argument",
            "missing or empty query parameter q",
        ));
    }
    let defaults = WalkConfig::default();
    let params = SearchParams {
        k: p.k.unwrap_or(defaults.k),
        tcm: p.tcm.unwrap_or(defaults.t_cm),
        seed: p
            .seed
            .unwrap_or_else(|| rand::random_range(0..MAX_DEFAULT_SEED)),
        max_walk_factor: p.max_walk_factor.unwrap_or(defaults.max_walk_factor),
    };
    params.walk_config().validate()?;
    let limit = p.limit.unwrap_or(DEFAULT_LIMIT);

    let snapshot = state.snapshot.clone();
    let response =
        tokio::task::spawn_blocking(move || search::search(&snapshot, &q, &params, limit))
            .await
            .map_err(|e| ApiError {
                status: StatusCode::INTERNAL_SERVER_ERROR,
                body: ErrorBody {
                    error: e.to_string(),
                    kind: "internal".into(),
                },
            })??;
    Ok(Json(response).into_response())
}

async fn stats_handler(
    State(state): State<AppState>,
    query: Result<Query<StatsQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    let Query(p) = query?;
    let q = p.q.filter(|q| !q.trim().is_empty());
    let mode = p.mode.unwrap_or_default();
    let xmin = p.xmin.unwrap_or(1);
    let estimator = p.estimator.unwrap_or_default();
    let snapshot = state.snapshot.clone();
    let response = tokio::task::spawn_blocking(move || {
        search::stats(&snapshot, q.as_deref(), mode, xmin, estimator)
    })
    .await
    .map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        body: ErrorBody {
            error: e.to_string(),
            kind: "internal".into(),
        },
    })??;
    Ok(Json(response).into_response())
}

/// CORS policy: any origin when `origin` is `None` or `"*"`.
pub fn cors_layer(origin: Option<&str>) -> Result<CorsLayer, ServeError> {
    let allow = match origin {
        None | Some("*") => AllowOrigin::any(),
        Some(o) => AllowOrigin::exact(
            HeaderValue::from_str(o).map_err(|_| ServeError::Cors(o.to_owned()))?,
        ),
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([axum::http::Method::GET]))
}

pub fn router(state: AppState, cors: CorsLayer) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/search", get(search_handler))
        .route("/stats", get(stats_handler))
        .layer(cors)
        .with_state(state)
}

/// Serves `app` on an already bound listener until the process is interrupted.
pub async fn run(listener: tokio::net::TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Loads the snapshot, binds `addr` and serves until ctrl-c.
pub async fn serve_snapshot(
    snapshot_dir: &Path,
    addr: SocketAddr,
    cors_origin: Option<&str>,
) -> Result<(), ServeError> {
    let snapshot = Snapshot::load(snapshot_dir)?;
    tracing::info!(
        nodes = snapshot.graph.node_count(),
        edges = snapshot.graph.edge_count(),
        docs = snapshot.docs.len(),
        "snapshot loaded"
    );
    let app = router(AppState::new(snapshot), cors_layer(cors_origin)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    run(listener, app).await?;
    Ok(())
}
