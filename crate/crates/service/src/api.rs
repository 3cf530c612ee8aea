//! HTTP routes.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/sessions` | summaries |
//! | POST | `/api/sessions` | ingest `{"manifest_path": ...}` |
//! | GET | `/api/sessions/{id}` | session overview |
//! | GET | `/api/sessions/{id}/streams/{modality}/{source}` | `?smooth=&activity=` |
//! | GET, PUT | `/api/sessions/{id}/activities` | PUT takes a relabel request |
//! | GET | `/api/sessions/{id}/analytics/{kind}` | see [`AnalyticsQuery`] |
//! | GET | `/api/sessions/{id}/media` | media manifest |
//! | GET | `/media/{id}/{media_id}` | media bytes, range requests honored |

use std::path::PathBuf;

use axum::body::Body;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use mmla_core::ingest::Modality;
use serde::{Deserialize, Serialize};
use tower::ServiceExt;
use tower_http::services::ServeFile;

use crate::engine::{AnalyticsQuery, Engine, RelabelRequest, Result};
use crate::error::{ErrorCode, ServiceError};

pub fn router(engine: Engine) -> Router {
    Router::new()
        .route("/api/sessions", get(list_sessions).post(ingest))
        .route("/api/sessions/{id}", get(session))
        .route("/api/sessions/{id}/streams/{modality}/{source}", get(stream))
        .route("/api/sessions/{id}/activities", get(activities).put(relabel))
        .route("/api/sessions/{id}/analytics/{kind}", get(analytics))
        .route("/api/sessions/{id}/media", get(media_manifest))
        .route("/media/{id}/{media_id}", get(media))
        .fallback(|| async { ServiceError::new(ErrorCode::NotFound, "no such route") })
        .with_state(engine)
}

/// Run a store-touching operation off the async workers.
async fn blocking<T, F>(engine: Engine, f: F) -> Result<T>
where
    T: Send + 'static,
    F: FnOnce(&Engine) -> Result<T> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&engine))
        .await
        .map_err(|e| ServiceError::new(ErrorCode::StorageFailure, format!("worker failed: {e}")))?
}

fn json<T: Serialize>(r: Result<T>) -> Response {
    match r {
        Ok(v) => Json(v).into_response(),
        Err(e) => e.into_response(),
    }
}

fn query<T>(q: std::result::Result<Query<T>, QueryRejection>) -> Result<T> {
    q.map(|Query(v)| v).map_err(|e| ServiceError::bad_params(e.body_text()))
}

async fn list_sessions(State(engine): State<Engine>) -> Response {
    json(blocking(engine, |e| e.list_sessions()).await)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IngestBody {
    manifest_path: PathBuf,
}

async fn ingest(State(engine): State<Engine>, body: std::result::Result<Json<IngestBody>, JsonRejection>) -> Response {
    let body = match body {
        Ok(Json(b)) => b,
        Err(e) => return ServiceError::bad_params(e.body_text()).into_response(),
    };
    match blocking(engine, move |e| e.ingest_session(&body.manifest_path)).await {
        Ok(outcome) => (StatusCode::CREATED, Json(outcome)).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn session(State(engine): State<Engine>, Path(id): Path<String>) -> Response {
    json(blocking(engine, move |e| e.session_view(&id)).await)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StreamQuery {
    smooth: Option<u64>,
    activity: Option<String>,
}

async fn stream(
    State(engine): State<Engine>,
    Path((id, modality, source)): Path<(String, String, String)>,
    q: std::result::Result<Query<StreamQuery>, QueryRejection>,
) -> Response {
    let run = async move {
        let q = query(q)?;
        let modality: Modality = modality.parse().map_err(|m: String| ServiceError::new(ErrorCode::NotFound, m))?;
        blocking(engine, move |e| e.get_stream(&id, modality, &source, q.smooth, q.activity.as_deref())).await
    };
    json(run.await)
}

async fn activities(State(engine): State<Engine>, Path(id): Path<String>) -> Response {
    json(blocking(engine, move |e| e.activities(&id)).await)
}

#[derive(Debug, Serialize)]
struct RelabelResponse {
    session_id: String,
    activities_version: u64,
}

async fn relabel(
    State(engine): State<Engine>,
    Path(id): Path<String>,
    body: std::result::Result<Json<RelabelRequest>, JsonRejection>,
) -> Response {
    let req = match body {
        Ok(Json(r)) => r,
        Err(e) => return ServiceError::bad_params(e.body_text()).into_response(),
    };
    json(
        blocking(engine, move |e| {
            let activities_version = e.relabel(&id, &req)?;
            Ok(RelabelResponse { session_id: id, activities_version })
        })
        .await,
    )
}

async fn analytics(
    State(engine): State<Engine>,
    Path((id, kind)): Path<(String, String)>,
    q: std::result::Result<Query<AnalyticsQuery>, QueryRejection>,
) -> Response {
    let run = async move {
        let q = query(q)?;
        let kind = kind.parse()?;
        blocking(engine, move |e| e.get_analytics(&id, kind, &q)).await
    };
    json(run.await)
}

async fn media_manifest(State(engine): State<Engine>, Path(id): Path<String>) -> Response {
    json(blocking(engine, move |e| e.media_manifest(&id)).await)
}

async fn media(State(engine): State<Engine>, Path((id, media_id)): Path<(String, String)>, req: Request) -> Response {
    let path = match blocking(engine, move |e| e.media_path(&id, &media_id)).await {
        Ok(p) => p,
        Err(e) => return e.into_response(),
    };
    match ServeFile::new(path).oneshot(req).await {
        Ok(res) => res.map(Body::new),
        Err(e) => ServiceError::new(ErrorCode::StorageFailure, e.to_string()).into_response(),
    }
}
