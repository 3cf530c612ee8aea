use std::path::Path;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use mmla_core::analytics::AnalyticsError;
use mmla_core::store::StoreError;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    NotFound,
    VersionConflict,
    OverlappingActivities,
    InvalidActivity,
    OutOfBounds,
    UnknownActivity,
    BadParams,
    IngestFailed,
    StorageFailure,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound | ErrorCode::UnknownActivity => StatusCode::NOT_FOUND,
            ErrorCode::VersionConflict => StatusCode::CONFLICT,
            ErrorCode::OverlappingActivities
            | ErrorCode::InvalidActivity
            | ErrorCode::OutOfBounds
            | ErrorCode::IngestFailed => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::BadParams => StatusCode::BAD_REQUEST,
            ErrorCode::StorageFailure => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Error body returned by every endpoint: `{code, message, stage?}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[error("{message}")]
pub struct ServiceError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
}

impl ServiceError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into(), stage: None }
    }

    pub fn bad_params(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadParams, message)
    }

    /// An ingest failure at `stage`, naming the file involved.
    pub fn ingest(stage: &str, path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: ErrorCode::IngestFailed,
            message: format!("{}: {e}", path.display()),
            stage: Some(stage.to_string()),
        }
    }
}

impl From<StoreError> for ServiceError {
    fn from(e: StoreError) -> Self {
        let code = match &e {
            StoreError::NotFound(_) | StoreError::MediaNotFound { .. } => ErrorCode::NotFound,
            StoreError::StaleWrite { .. } | StoreError::VersionRegression { .. } => ErrorCode::VersionConflict,
            StoreError::InvalidSession(_) => ErrorCode::BadParams,
            StoreError::StorageFailure { .. } | StoreError::Corrupt { .. } => ErrorCode::StorageFailure,
        };
        Self::new(code, e.to_string())
    }
}

impl From<AnalyticsError> for ServiceError {
    fn from(e: AnalyticsError) -> Self {
        let code = match &e {
            AnalyticsError::OverlappingActivities { .. } => ErrorCode::OverlappingActivities,
            AnalyticsError::InvalidActivity { .. } => ErrorCode::InvalidActivity,
            AnalyticsError::NoSuchModality { .. } => ErrorCode::NotFound,
            _ => ErrorCode::BadParams,
        };
        Self::new(code, e.to_string())
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}
