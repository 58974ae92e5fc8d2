use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use blockshelf_core::search::SearchError;
use blockshelf_core::EditError;
use serde_json::json;
use thiserror::Error;

/// A failed request, mapped onto an HTTP status and a machine-readable code.
#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{message}")]
    BadRequest { code: String, message: String },
    #[error("revision {expected} is stale; current revision is {current}")]
    Stale { expected: u64, current: u64 },
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("{message}")]
    Unprocessable { code: String, message: String },
    #[error("could not save workspace: {0}")]
    Save(String),
    #[error("the workspace writer has stopped")]
    WriterGone,
}

impl ApiError {
    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError::BadRequest { code: code.to_owned(), message: message.into() }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest { .. } => StatusCode::BAD_REQUEST,
            ApiError::Stale { .. } => StatusCode::CONFLICT,
            ApiError::Edit(e) if e.is_not_found() => StatusCode::NOT_FOUND,
            ApiError::Edit(_) | ApiError::Unprocessable { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Search(SearchError::UnknownShelf(_)) => StatusCode::NOT_FOUND,
            ApiError::Search(_) => StatusCode::BAD_REQUEST,
            ApiError::Save(_) | ApiError::WriterGone => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &str {
        match self {
            ApiError::BadRequest { code, .. } | ApiError::Unprocessable { code, .. } => code,
            ApiError::Stale { .. } => "stale-revision",
            ApiError::Edit(e) => e.code(),
            ApiError::Search(e) => e.code(),
            ApiError::Save(_) => "save-failed",
            ApiError::WriterGone => "writer-gone",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": { "code": self.code(), "message": self.to_string() } });
        if let ApiError::Stale { current, .. } = self {
            body["revision"] = json!(current);
        }
        (self.status(), Json(body)).into_response()
    }
}
