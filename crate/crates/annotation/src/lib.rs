//! JSON endpoints over an [`AnnotationStore`]: the labeling queue, label and
//! adjudication submission, agreement statistics and export.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use courtbias_core::backend::Label;
use courtbias_core::sampling::AnnotationStore;
use courtbias_core::Error;
use serde::{Deserialize, Serialize};

pub const DEFAULT_ADJUDICATOR: &str = "adjudicator";

pub type SharedStore = Arc<RwLock<AnnotationStore>>;

/// Error body: `{code, message}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(skip)]
    status: u16,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            code: code.to_string(),
            message: message.into(),
            status: status.as_u16(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::UnknownItem(_) => (StatusCode::NOT_FOUND, "unknown_item"),
            Error::UnknownAnnotator(_) => (StatusCode::BAD_REQUEST, "unknown_annotator"),
            Error::InvalidArgument(_) => (StatusCode::BAD_REQUEST, "invalid_argument"),
            Error::NoDoubleAnnotations(_) => (StatusCode::CONFLICT, "no_double_annotations"),
            Error::Unlabeled(_) => (StatusCode::CONFLICT, "unlabeled_items"),
            Error::Unadjudicated(_) => (StatusCode::CONFLICT, "unadjudicated_disagreements"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn poisoned() -> ApiError {
    ApiError::new(
        StatusCode::INTERNAL_SERVER_ERROR,
        "internal",
        "store lock poisoned",
    )
}

#[derive(Debug, Deserialize)]
pub struct NextQuery {
    pub annotator: String,
    pub iteration: Option<u32>,
}

#[derive(Debug, Deserialize)]
pub struct IterationQuery {
    pub iteration: u32,
}

#[derive(Debug, Deserialize)]
pub struct OptionalIteration {
    pub iteration: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRequest {
    pub item_id: String,
    pub annotator: String,
    pub label: Label,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdjudicationRequest {
    pub item_id: String,
    pub final_label: Label,
    #[serde(default)]
    pub resolved_by: Option<String>,
}

async fn next_item(
    State(store): State<SharedStore>,
    q: Result<Query<NextQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = q?;
    let store = store.read().map_err(|_| poisoned())?;
    Ok(match store.next_item(&q.annotator, q.iteration)? {
        Some(item) => Json(item.clone()).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn post_label(
    State(store): State<SharedStore>,
    body: Result<Json<LabelRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body?;
    let mut store = store.write().map_err(|_| poisoned())?;
    let record = store.record_label(&req.item_id, &req.annotator, req.label)?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

async fn kappa(
    State(store): State<SharedStore>,
    q: Result<Query<IterationQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = q?;
    let store = store.read().map_err(|_| poisoned())?;
    let k = store.kappa(q.iteration)?;
    Ok(Json(serde_json::json!({
        "iteration": q.iteration,
        "kappa": k.kappa,
        "observed": k.observed,
        "expected": k.expected,
        "items": k.items,
        "degenerate": k.degenerate,
    }))
    .into_response())
}

async fn item(State(store): State<SharedStore>, Path(id): Path<String>) -> ApiResult<Response> {
    let store = store.read().map_err(|_| poisoned())?;
    Ok(Json(store.item(&id)?.clone()).into_response())
}

async fn post_adjudication(
    State(store): State<SharedStore>,
    body: Result<Json<AdjudicationRequest>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body?;
    let mut store = store.write().map_err(|_| poisoned())?;
    let by = req.resolved_by.as_deref().unwrap_or(DEFAULT_ADJUDICATOR);
    let record = store.record_adjudication(&req.item_id, req.final_label, by)?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

async fn disagreements(
    State(store): State<SharedStore>,
    q: Result<Query<OptionalIteration>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = q?;
    let store = store.read().map_err(|_| poisoned())?;
    Ok(Json(store.disagreements(q.iteration)).into_response())
}

async fn export(
    State(store): State<SharedStore>,
    q: Result<Query<IterationQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = q?;
    let store = store.read().map_err(|_| poisoned())?;
    let records = store.export_training_set(q.iteration)?;
    let path = store.write_export(q.iteration)?;
    Ok(Json(serde_json::json!({
        "iteration": q.iteration,
        "path": path.display().to_string(),
        "records": records.len(),
    }))
    .into_response())
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

pub fn router(store: SharedStore) -> Router {
    Router::new()
        .route("/api/queue/next", get(next_item))
        .route("/api/labels", post(post_label))
        .route("/api/stats/kappa", get(kappa))
        .route("/api/items/{id}", get(item))
        .route("/api/adjudications", post(post_adjudication))
        .route("/api/disagreements", get(disagreements))
        .route("/api/export", post(export))
        .fallback(not_found)
        .with_state(store)
}

pub fn shared(store: AnnotationStore) -> SharedStore {
    Arc::new(RwLock::new(store))
}

/// Serves the endpoints on `addr` until Ctrl-C.
pub async fn serve(addr: SocketAddr, store: AnnotationStore) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(shared(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Runs [`serve`] on a new multi-threaded runtime.
pub fn serve_blocking(addr: SocketAddr, store: AnnotationStore) -> std::io::Result<()> {
    tokio::runtime::Runtime::new()?.block_on(serve(addr, store))
}
