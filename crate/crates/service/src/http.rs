//! HTTP routes over [`SessionStore`]. Session work runs on the blocking pool
//! under the session's lock, so requests for one session are serialized.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::session::{BatchView, CreateRequest, EstimateView, SubmitRequest, SubmitView};
use crate::store::SessionStore;

type Shared = Arc<SessionStore>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
}

pub fn router(store: Shared) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create))
        .route("/sessions/import", post(import))
        .route("/sessions/{id}/batch", get(batch))
        .route("/sessions/{id}/labels", post(labels))
        .route("/sessions/{id}/estimate", get(estimate))
        .route("/sessions/{id}/export", get(export))
        .with_state(store)
}

async fn blocking<T, F>(f: F) -> Result<T>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T> + Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T> {
    serde_json::from_slice(body).map_err(|e| ServiceError::Validation(e.to_string()))
}

async fn healthz() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn create(State(store): State<Shared>, body: Bytes) -> Result<(StatusCode, Json<Created>)> {
    let session_id = blocking(move || {
        let req: CreateRequest = parse(&body)?;
        store.create(req)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(Created { session_id })))
}

async fn import(State(store): State<Shared>, body: Bytes) -> Result<(StatusCode, Json<Created>)> {
    let session_id = blocking(move || store.import(&body)).await?;
    Ok((StatusCode::CREATED, Json(Created { session_id })))
}

async fn batch(State(store): State<Shared>, Path(id): Path<String>) -> Result<Json<BatchView>> {
    blocking(move || store.batch(&id)).await.map(Json)
}

async fn labels(State(store): State<Shared>, Path(id): Path<String>, body: Bytes) -> Result<Json<SubmitView>> {
    blocking(move || {
        let req: SubmitRequest = parse(&body)?;
        store.submit(&id, &req.labels)
    })
    .await
    .map(Json)
}

async fn estimate(State(store): State<Shared>, Path(id): Path<String>) -> Result<Json<EstimateView>> {
    blocking(move || store.estimate(&id)).await.map(Json)
}

async fn export(State(store): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse> {
    let bytes = blocking(move || store.export(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes))
}
