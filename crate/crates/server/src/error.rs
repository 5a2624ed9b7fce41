//! Error bodies. Every error response is `{"code", "message", "details"}`.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use framecue::engine::EngineError;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    NotFound,
    Conflict,
    OverlapViolation,
    IllegalTransition,
    ValidationFailed,
    OutOfBounds,
    SchemaMismatch,
    NothingToUndo,
    NothingToRedo,
    BadRequest,
    Unauthorized,
    ProviderError,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 13] = [
        ErrorCode::NotFound,
        ErrorCode::Conflict,
        ErrorCode::OverlapViolation,
        ErrorCode::IllegalTransition,
        ErrorCode::ValidationFailed,
        ErrorCode::OutOfBounds,
        ErrorCode::SchemaMismatch,
        ErrorCode::NothingToUndo,
        ErrorCode::NothingToRedo,
        ErrorCode::BadRequest,
        ErrorCode::Unauthorized,
        ErrorCode::ProviderError,
        ErrorCode::Internal,
    ];

    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Conflict
            | ErrorCode::OverlapViolation
            | ErrorCode::IllegalTransition
            | ErrorCode::NothingToUndo
            | ErrorCode::NothingToRedo => StatusCode::CONFLICT,
            ErrorCode::ValidationFailed | ErrorCode::OutOfBounds | ErrorCode::SchemaMismatch => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ErrorCode::BadRequest => StatusCode::BAD_REQUEST,
            ErrorCode::Unauthorized => StatusCode::UNAUTHORIZED,
            ErrorCode::ProviderError => StatusCode::BAD_GATEWAY,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            details: Value::Null,
        }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        Self::new(ErrorCode::NotFound, format!("no {kind} {id}"))
            .with_details(json!({ "kind": kind, "id": id }))
    }

    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        Self::new(ErrorCode::ValidationFailed, message).with_details(json!({ "field": field }))
    }

    pub fn conflict(expected: u64, actual: u64) -> Self {
        Self::new(
            ErrorCode::Conflict,
            format!("expected revision {expected}, project is at {actual}"),
        )
        .with_details(json!({ "expected_revision": expected, "revision": actual }))
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        match e {
            EngineError::UnknownLayer(id) => ApiError::not_found("layer", &id),
            EngineError::UnknownEdit(id) => ApiError::not_found("edit", &id),
            EngineError::UnknownCommand(id) => ApiError::not_found("command", &id),
            EngineError::IllegalTransition { id, from, action } => {
                ApiError::new(ErrorCode::IllegalTransition, message)
                    .with_details(json!({ "edit_id": id, "status": from, "action": action }))
            }
            EngineError::OverlapViolation {
                edit_id,
                conflicting_id,
            } => ApiError::new(ErrorCode::OverlapViolation, message)
                .with_details(json!({ "edit_id": edit_id, "conflicting_id": conflicting_id })),
            EngineError::OutOfBounds(_) => ApiError::new(ErrorCode::OutOfBounds, message),
            EngineError::SchemaMismatch(_) => ApiError::new(ErrorCode::SchemaMismatch, message),
            EngineError::InvalidCommand(_) => ApiError::new(ErrorCode::ValidationFailed, message),
            EngineError::NothingToUndo => ApiError::new(ErrorCode::NothingToUndo, message),
            EngineError::NothingToRedo => ApiError::new(ErrorCode::NothingToRedo, message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}
