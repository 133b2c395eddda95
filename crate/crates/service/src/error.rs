use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

use prefplan::Error as CoreError;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("invalid request")]
    BadRequest(Vec<String>),

    #[error("{0} not found")]
    NotFound(String),

    #[error("{0}")]
    Conflict(String),

    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Serialize)]
struct Body<'a> {
    error: String,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    problems: &'a [String],
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Schema(problems) => ApiError::BadRequest(problems),
            CoreError::NoCurrentPlan => ApiError::Conflict(e.to_string()),
            CoreError::Io { .. } => ApiError::Internal(e.to_string()),
            other => ApiError::BadRequest(vec![other.to_string()]),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let problems = match &self {
            ApiError::BadRequest(p) => p.as_slice(),
            _ => &[],
        };
        (status, Json(Body { error: self.to_string(), problems })).into_response()
    }
}
