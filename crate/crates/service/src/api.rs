use axum::body::Bytes;
use axum::extract::{Path, Query as QueryParams, State};
use axum::http::{header, HeaderMap};
use axum::response::{IntoResponse, Response};
use axum::Json;
use blockshelf_core::{generate, parse_shelf_export, search, serialize_shelf_export, Block, BlockId, NamePolicy, Query, Shelf, ShelfId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::oneshot;

use crate::error::ApiError;
use crate::writer::{Applied, Mutation, Request};
use crate::Service;

pub const REVISION_HEADER: &str = "if-match-revision";

/// Response body of every successful JSON endpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope {
    pub revision: u64,
    pub payload: Value,
    pub warnings: Vec<String>,
}

impl From<Applied> for Envelope {
    fn from(a: Applied) -> Self {
        Envelope { revision: a.revision, payload: a.payload, warnings: a.warnings }
    }
}

impl IntoResponse for Envelope {
    fn into_response(self) -> Response {
        Json(self).into_response()
    }
}

type ApiResult = Result<Envelope, ApiError>;

#[derive(Serialize)]
struct RootView<'a> {
    id: &'a BlockId,
    shelf: Option<&'a ShelfId>,
    hidden: bool,
}

#[derive(Serialize)]
struct WorkspaceView<'a> {
    blocks: Vec<&'a Block>,
    roots: Vec<RootView<'a>>,
    shelves: Vec<&'a Shelf>,
    visible_roots: Vec<BlockId>,
}

fn revision_header(headers: &HeaderMap) -> Result<Option<u64>, ApiError> {
    let Some(value) = headers.get(REVISION_HEADER) else {
        return Ok(None);
    };
    value
        .to_str()
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .map(Some)
        .ok_or_else(|| ApiError::bad_request("invalid-revision", "If-Match-Revision must be a non-negative integer"))
}

fn required_revision(headers: &HeaderMap) -> Result<u64, ApiError> {
    revision_header(headers)?.ok_or_else(|| ApiError::bad_request("missing-revision", "mutations require an If-Match-Revision header"))
}

fn json_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("malformed-body", e.to_string()))
}

async fn send(service: &Service, make: impl FnOnce(oneshot::Sender<Result<Applied, ApiError>>) -> Request) -> ApiResult {
    let (reply, response) = oneshot::channel();
    service.requests.send(make(reply)).await.map_err(|_| ApiError::WriterGone)?;
    Ok(response.await.map_err(|_| ApiError::WriterGone)??.into())
}

async fn mutate(service: &Service, headers: &HeaderMap, op: Mutation) -> ApiResult {
    let expected = required_revision(headers)?;
    send(service, |reply| Request::Mutate { expected, op, reply }).await
}

pub async fn get_workspace(State(service): State<Service>) -> ApiResult {
    let ws = service.snapshot();
    let visible_roots = ws.visible_roots();
    let roots = ws
        .top_level()
        .iter()
        .map(|id| RootView { id, shelf: ws.shelf_of(id), hidden: !visible_roots.contains(id) })
        .collect();
    let view = WorkspaceView {
        blocks: ws.blocks().values().collect(),
        roots,
        shelves: ws.shelves().iter().collect(),
        visible_roots: visible_roots.clone(),
    };
    Ok(Envelope { revision: ws.revision(), payload: json!(view), warnings: Vec::new() })
}

pub async fn get_shelves(State(service): State<Service>) -> ApiResult {
    let ws = service.snapshot();
    Ok(Envelope { revision: ws.revision(), payload: json!(ws.shelf_box()), warnings: Vec::new() })
}

pub async fn get_codegen(State(service): State<Service>) -> ApiResult {
    let ws = service.snapshot();
    let program = generate(&ws).map_err(|e| ApiError::Unprocessable { code: "codegen-failed".into(), message: e.to_string() })?;
    Ok(Envelope {
        revision: ws.revision(),
        payload: json!({ "text": program.text, "forms": program.forms }),
        warnings: program.warnings.iter().map(ToString::to_string).collect(),
    })
}

#[derive(Deserialize)]
pub struct SearchParams {
    comment: Option<String>,
    #[serde(rename = "type")]
    block_type: Option<String>,
    field: Option<String>,
    shelf: Option<String>,
}

pub async fn get_search(State(service): State<Service>, QueryParams(params): QueryParams<SearchParams>) -> ApiResult {
    let field_value = match params.field {
        Some(f) => {
            let (name, value) = f
                .split_once('=')
                .ok_or_else(|| ApiError::bad_request("invalid-field", "field must have the form NAME=VALUE"))?;
            Some((name.to_owned(), value.to_owned()))
        }
        None => None,
    };
    let query = Query {
        comment_substring: params.comment,
        block_type: params.block_type,
        field_value,
        shelf: params.shelf.map(ShelfId::new),
    };
    let ws = service.snapshot();
    let matches = search(&ws, &query)?;
    Ok(Envelope { revision: ws.revision(), payload: json!(matches), warnings: Vec::new() })
}

pub async fn get_export(State(service): State<Service>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let ws = service.snapshot();
    let doc = ws.export_shelf(&ShelfId::new(id))?;
    let bytes = serialize_shelf_export(&doc).map_err(|e| ApiError::Unprocessable { code: "export-failed".into(), message: e.to_string() })?;
    Ok(([(header::CONTENT_TYPE, "application/xml")], bytes).into_response())
}

#[derive(Deserialize)]
struct CreateBody {
    name: String,
    #[serde(default)]
    roots: Vec<BlockId>,
}

pub async fn post_shelves(State(service): State<Service>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let CreateBody { name, roots } = json_body(&body)?;
    mutate(&service, &headers, Mutation::CreateShelf { name, roots }).await
}

#[derive(Deserialize)]
struct RootsBody {
    roots: Vec<BlockId>,
}

pub async fn post_assign(State(service): State<Service>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let RootsBody { roots } = json_body(&body)?;
    mutate(&service, &headers, Mutation::Assign { shelf: ShelfId::new(id), roots }).await
}

pub async fn post_unassign(State(service): State<Service>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let RootsBody { roots } = json_body(&body)?;
    mutate(&service, &headers, Mutation::Unassign { shelf: ShelfId::new(id), roots }).await
}

#[derive(Deserialize)]
struct VisibilityBody {
    visible: bool,
}

pub async fn post_visibility(State(service): State<Service>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let VisibilityBody { visible } = json_body(&body)?;
    mutate(&service, &headers, Mutation::Visibility { shelf: ShelfId::new(id), visible }).await
}

#[derive(Deserialize)]
struct CollapseBody {
    collapsed: bool,
}

pub async fn post_collapse(State(service): State<Service>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let CollapseBody { collapsed } = json_body(&body)?;
    mutate(&service, &headers, Mutation::Collapse { shelf: ShelfId::new(id), collapsed }).await
}

#[derive(Deserialize)]
struct EnabledBody {
    enabled: bool,
}

pub async fn post_enabled(State(service): State<Service>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let EnabledBody { enabled } = json_body(&body)?;
    mutate(&service, &headers, Mutation::Enabled { shelf: ShelfId::new(id), enabled }).await
}

pub async fn post_duplicate(State(service): State<Service>, Path(id): Path<String>, headers: HeaderMap) -> ApiResult {
    mutate(&service, &headers, Mutation::Duplicate { shelf: ShelfId::new(id) }).await
}

#[derive(Deserialize)]
pub struct ImportParams {
    name_policy: Option<String>,
}

pub async fn post_import(
    State(service): State<Service>,
    QueryParams(params): QueryParams<ImportParams>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let policy = match params.name_policy {
        Some(p) => p.parse::<NamePolicy>().map_err(|e| ApiError::bad_request("invalid-name-policy", e))?,
        None => NamePolicy::default(),
    };
    let doc = parse_shelf_export(&body).map_err(|e| ApiError::BadRequest { code: e.code.to_owned(), message: e.to_string() })?;
    mutate(&service, &headers, Mutation::Import { doc, policy }).await
}

#[derive(Deserialize)]
struct CommentBody {
    comment: Option<String>,
}

pub async fn post_comment(State(service): State<Service>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let CommentBody { comment } = json_body(&body)?;
    mutate(&service, &headers, Mutation::Comment { block: BlockId::new(id), comment }).await
}

pub async fn post_save(State(service): State<Service>, headers: HeaderMap) -> ApiResult {
    let expected = revision_header(&headers)?;
    send(&service, |reply| Request::Save { expected, reply }).await
}
