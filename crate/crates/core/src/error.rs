use thiserror::Error;

use crate::diag::Diagnostic;
use crate::model::{BlockId, Slot};
use crate::shelf::ShelfId;

/// Failure of a block-model or shelf operation. The workspace is left
/// untouched whenever one of these is returned.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("unknown block {0}")]
    UnknownBlock(BlockId),
    #[error("unknown shelf {0}")]
    UnknownShelf(ShelfId),
    #[error("block type must not be empty")]
    EmptyBlockType,
    #[error("slot {slot} of block {parent} is already occupied")]
    SlotOccupied { parent: BlockId, slot: Slot },
    #[error("connecting {child} under {parent} would create a cycle")]
    WouldCreateCycle { parent: BlockId, child: BlockId },
    #[error("block {0} is not top-level and cannot be connected")]
    ChildNotTopLevel(BlockId),
    #[error("block {0} is shelved; remove it from its shelf before nesting it")]
    ChildShelved(BlockId),
    #[error("block {0} is already top-level")]
    AlreadyTopLevel(BlockId),
    #[error("block {0} is nested; only top-level blocks can be collapsed")]
    CollapseOnNestedBlock(BlockId),
    #[error("block {0} is not a top-level block")]
    NotTopLevel(BlockId),
    #[error("block {block} already belongs to shelf {shelf}")]
    AlreadyShelved { block: BlockId, shelf: ShelfId },
    #[error("block {block} is not a member of shelf {shelf}")]
    NotAMember { block: BlockId, shelf: ShelfId },
    #[error("shelf name must not be empty")]
    EmptyName,
    #[error("unsupported shelf export version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed shelf export: {}", summarize(.0))]
    MalformedDocument(Vec<Diagnostic>),
}

fn summarize(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("{}: {}", d.code, d.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl EditError {
    /// Stable machine-readable code, used in CLI diagnostics and API bodies.
    pub fn code(&self) -> &'static str {
        match self {
            EditError::UnknownBlock(_) => "unknown-block",
            EditError::UnknownShelf(_) => "unknown-shelf",
            EditError::EmptyBlockType => "empty-block-type",
            EditError::SlotOccupied { .. } => "slot-occupied",
            EditError::WouldCreateCycle { .. } => "would-create-cycle",
            EditError::ChildNotTopLevel(_) => "child-not-top-level",
            EditError::ChildShelved(_) => "child-shelved",
            EditError::AlreadyTopLevel(_) => "already-top-level",
            EditError::CollapseOnNestedBlock(_) => "collapse-on-nested-block",
            EditError::NotTopLevel(_) => "not-top-level",
            EditError::AlreadyShelved { .. } => "already-shelved",
            EditError::NotAMember { .. } => "not-a-member",
            EditError::EmptyName => "empty-name",
            EditError::UnsupportedVersion(_) => "unsupported-version",
            EditError::MalformedDocument(_) => "malformed-document",
        }
    }

    /// True for errors caused by an id that does not resolve.
    pub fn is_not_found(&self) -> bool {
        matches!(self, EditError::UnknownBlock(_) | EditError::UnknownShelf(_))
    }
}
