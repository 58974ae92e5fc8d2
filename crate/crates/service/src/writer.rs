use std::path::PathBuf;
use std::sync::Arc;

use blockshelf_core::shelf::DEFAULT_DUPLICATE_OFFSET;
use blockshelf_core::{serialize_workspace, BlockId, EditError, NamePolicy, ShelfExport, ShelfId, Workspace};
use serde_json::{json, Value};
use tokio::sync::{mpsc, oneshot, watch};

use crate::error::ApiError;
use crate::persist::write_atomic;

/// One state-changing request, applied by the single writer.
#[derive(Debug, Clone)]
pub enum Mutation {
    CreateShelf { name: String, roots: Vec<BlockId> },
    Assign { shelf: ShelfId, roots: Vec<BlockId> },
    Unassign { shelf: ShelfId, roots: Vec<BlockId> },
    Visibility { shelf: ShelfId, visible: bool },
    Collapse { shelf: ShelfId, collapsed: bool },
    Enabled { shelf: ShelfId, enabled: bool },
    Duplicate { shelf: ShelfId },
    Import { doc: ShelfExport, policy: NamePolicy },
    Comment { block: BlockId, comment: Option<String> },
}

/// Result of an applied mutation: the envelope payload and its warnings.
#[derive(Debug)]
pub struct Applied {
    pub revision: u64,
    pub payload: Value,
    pub warnings: Vec<String>,
}

fn status_of(ws: &Workspace, shelf: &ShelfId) -> Value {
    let status = ws.shelf_box().into_iter().find(|s| &s.shelf == shelf);
    serde_json::to_value(status).expect("shelf status serializes")
}

fn apply(ws: &mut Workspace, op: Mutation) -> Result<(Value, Vec<String>), EditError> {
    let payload = match op {
        Mutation::CreateShelf { name, roots } => {
            let id = ws.create_shelf(&name, &roots)?;
            json!({ "shelf": id, "status": status_of(ws, &id) })
        }
        Mutation::Assign { shelf, roots } => {
            ws.assign_to_shelf(&shelf, &roots)?;
            status_of(ws, &shelf)
        }
        Mutation::Unassign { shelf, roots } => {
            ws.remove_from_shelf(&shelf, &roots)?;
            status_of(ws, &shelf)
        }
        Mutation::Visibility { shelf, visible } => {
            ws.set_shelf_visibility(&shelf, visible)?;
            status_of(ws, &shelf)
        }
        Mutation::Collapse { shelf, collapsed } => {
            if collapsed {
                ws.minimize_shelf(&shelf)?
            } else {
                ws.maximize_shelf(&shelf)?
            }
            status_of(ws, &shelf)
        }
        Mutation::Enabled { shelf, enabled } => {
            if enabled {
                ws.activate_shelf(&shelf)?
            } else {
                ws.deactivate_shelf(&shelf)?
            }
            status_of(ws, &shelf)
        }
        Mutation::Duplicate { shelf } => {
            let id = ws.duplicate_shelf(&shelf, DEFAULT_DUPLICATE_OFFSET)?;
            json!({ "shelf": id, "status": status_of(ws, &id) })
        }
        Mutation::Import { doc, policy } => {
            let (_, report) = ws.import_shelf(&doc, policy)?;
            let warnings = report.warnings.iter().map(ToString::to_string).collect();
            return Ok((serde_json::to_value(report).expect("report serializes"), warnings));
        }
        Mutation::Comment { block, comment } => {
            ws.set_comment(&block, comment)?;
            serde_json::to_value(ws.block(&block)).expect("block serializes")
        }
    };
    Ok((payload, Vec::new()))
}

pub(crate) enum Request {
    Mutate { expected: u64, op: Mutation, reply: oneshot::Sender<Result<Applied, ApiError>> },
    Save { expected: Option<u64>, reply: oneshot::Sender<Result<Applied, ApiError>> },
}

/// Owns the workspace and applies requests strictly in arrival order.
pub(crate) struct Writer {
    ws: Workspace,
    path: PathBuf,
    requests: mpsc::Receiver<Request>,
    published: watch::Sender<Arc<Workspace>>,
}

impl Writer {
    pub(crate) fn spawn(ws: Workspace, path: PathBuf) -> (mpsc::Sender<Request>, watch::Receiver<Arc<Workspace>>) {
        let (tx, requests) = mpsc::channel(64);
        let (published, snapshots) = watch::channel(Arc::new(ws.clone()));
        let writer = Writer { ws, path, requests, published };
        tokio::spawn(writer.run());
        (tx, snapshots)
    }

    fn check(&self, expected: u64) -> Result<(), ApiError> {
        let current = self.ws.revision();
        if expected == current {
            Ok(())
        } else {
            Err(ApiError::Stale { expected, current })
        }
    }

    async fn run(mut self) {
        while let Some(request) = self.requests.recv().await {
            match request {
                Request::Mutate { expected, op, reply } => {
                    let result = self.check(expected).and_then(|()| {
                        let (payload, warnings) = apply(&mut self.ws, op)?;
                        self.published.send_replace(Arc::new(self.ws.clone()));
                        tracing::debug!(revision = self.ws.revision(), "mutation applied");
                        Ok(Applied { revision: self.ws.revision(), payload, warnings })
                    });
                    let _ = reply.send(result);
                }
                Request::Save { expected, reply } => {
                    let result = match expected.map_or(Ok(()), |e| self.check(e)) {
                        Ok(()) => self.save().await,
                        Err(e) => Err(e),
                    };
                    let _ = reply.send(result);
                }
            }
        }
    }

    async fn save(&self) -> Result<Applied, ApiError> {
        let bytes = serialize_workspace(&self.ws).map_err(|e| ApiError::Save(e.to_string()))?;
        let len = bytes.len();
        let path = self.path.clone();
        tokio::task::spawn_blocking(move || write_atomic(&path, &bytes))
            .await
            .map_err(|e| ApiError::Save(e.to_string()))?
            .map_err(|e| ApiError::Save(e.to_string()))?;
        tracing::info!(path = %self.path.display(), bytes = len, "workspace saved");
        Ok(Applied {
            revision: self.ws.revision(),
            payload: json!({ "path": self.path.display().to_string(), "bytes": len }),
            warnings: Vec::new(),
        })
    }
}
