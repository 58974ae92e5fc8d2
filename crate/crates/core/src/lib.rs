//! Headless engine for block-based visual programs organized into shelves.
//!
//! A [`Workspace`] holds a forest of block stacks plus a registry of
//! user-defined shelves. Shelves group whole stacks and can be hidden,
//! minimized, deactivated, duplicated, and exported to a self-contained XML
//! document for re-use in other projects.
//!
//! - [`model`]: blocks, workspaces, and the per-block editing operations.
//! - [`shelf`]: shelves, the ShelfBox listing, export and import.
//! - [`xml`]: strict parser and canonical serializer for both file formats.
//! - [`codegen`]: canonical event-script compile used to observe semantics.
//! - [`search`]: block search and corpus statistics.

pub mod codegen;
pub mod diag;
pub mod error;
pub mod model;
pub mod search;
pub mod semantics;
pub mod shelf;
pub mod xml;

pub use codegen::{generate, semantics_diff, CanonicalProgram, HandlerDiff, HandlerKey};
pub use diag::{Diagnostic, Severity};
pub use error::EditError;
pub use model::{Block, BlockId, Position, Slot, Workspace};
pub use search::{corpus_stats, search, CorpusReport, Match, Query};
pub use shelf::{
    Coverage, ImportReport, NamePolicy, RefKind, Shelf, ShelfExport, ShelfId, ShelfRegistry,
    ShelfStatus, UnresolvedRef,
};
pub use xml::{
    parse_shelf_export, parse_workspace, serialize_shelf_export, serialize_workspace, ParseError,
};
