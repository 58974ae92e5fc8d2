//! HTTP/JSON API over one open workspace.
//!
//! All mutations go through a single writer task that owns the
//! [`Workspace`]; each must carry an `If-Match-Revision` header equal to the
//! current revision, otherwise the request is rejected with 409. Reads are
//! served from the latest committed snapshot.

mod api;
mod error;
pub mod persist;
mod writer;

use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use blockshelf_core::Workspace;
use tokio::net::TcpListener;
use tokio::sync::{mpsc, watch};

pub use api::{Envelope, REVISION_HEADER};
pub use error::ApiError;
pub use writer::Mutation;

/// Handle to a running workspace writer. Cheap to clone.
#[derive(Clone)]
pub struct Service {
    requests: mpsc::Sender<writer::Request>,
    snapshots: watch::Receiver<Arc<Workspace>>,
}

impl Service {
    /// Starts the writer task. `/save` writes to `path`. Must be called
    /// inside a tokio runtime.
    pub fn start(ws: Workspace, path: impl Into<PathBuf>) -> Self {
        let (requests, snapshots) = writer::Writer::spawn(ws, path.into());
        Service { requests, snapshots }
    }

    /// The latest committed workspace.
    pub fn snapshot(&self) -> Arc<Workspace> {
        self.snapshots.borrow().clone()
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/workspace", get(api::get_workspace))
            .route("/shelves", get(api::get_shelves).post(api::post_shelves))
            .route("/shelves/import", post(api::post_import))
            .route("/shelves/{id}/visibility", post(api::post_visibility))
            .route("/shelves/{id}/collapse", post(api::post_collapse))
            .route("/shelves/{id}/enabled", post(api::post_enabled))
            .route("/shelves/{id}/duplicate", post(api::post_duplicate))
            .route("/shelves/{id}/assign", post(api::post_assign))
            .route("/shelves/{id}/unassign", post(api::post_unassign))
            .route("/shelves/{id}/export", get(api::get_export))
            .route("/blocks/{id}/comment", post(api::post_comment))
            .route("/codegen", get(api::get_codegen))
            .route("/search", get(api::get_search))
            .route("/save", post(api::post_save))
            .with_state(self.clone())
    }
}

/// Serves `service` on `listener` until `shutdown` resolves.
pub async fn serve(
    service: Service,
    listener: TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, service.router()).with_graceful_shutdown(shutdown).await
}
