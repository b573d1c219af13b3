use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lowshot_core::EstimateError;
use serde::{Deserialize, Serialize};

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    Validation(String),
    #[error("session {0:?} not found")]
    NotFound(String),
    #[error("session {0:?} already exists")]
    SessionExists(String),
    #[error("session has spent its label budget")]
    SessionComplete,
    #[error("item {0:?} is not in the pending batch")]
    UnknownItem(String),
    #[error("item {0:?} is already labeled")]
    AlreadyLabeled(String),
    #[error("item {id:?}: label must be 0 or 1, got {value}")]
    InvalidLabel { id: String, value: String },
    #[error("no iteration has completed yet")]
    NoEstimateYet,
    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaMismatch { found: u32, expected: u32 },
    #[error("storage failure: {0}")]
    Storage(String),
    #[error("estimator failure: {0}")]
    Estimate(#[from] EstimateError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Validation(_) => "ValidationError",
            Self::NotFound(_) => "NotFound",
            Self::SessionExists(_) => "SessionExists",
            Self::SessionComplete => "SessionComplete",
            Self::UnknownItem(_) => "UnknownItem",
            Self::AlreadyLabeled(_) => "AlreadyLabeled",
            Self::InvalidLabel { .. } => "InvalidLabel",
            Self::NoEstimateYet => "NoEstimateYet",
            Self::SchemaMismatch { .. } => "SchemaMismatch",
            Self::Storage(_) => "StorageError",
            Self::Estimate(_) => "EstimateError",
            Self::Internal(_) => "InternalError",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            Self::Validation(_) | Self::UnknownItem(_) | Self::InvalidLabel { .. } | Self::SchemaMismatch { .. } => {
                StatusCode::BAD_REQUEST
            }
            Self::NotFound(_) => StatusCode::NOT_FOUND,
            Self::SessionExists(_) | Self::SessionComplete | Self::AlreadyLabeled(_) | Self::NoEstimateYet => {
                StatusCode::CONFLICT
            }
            Self::Storage(_) | Self::Estimate(_) | Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        Self::Storage(e.to_string())
    }
}

/// Wire form of every error response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            log::error!("{self}");
        }
        let body = ErrorBody {
            error: self.code().to_string(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}
