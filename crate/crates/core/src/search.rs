//! Block search over comments, types and fields, and block-count statistics
//! over a corpus of projects.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codegen::root_key;
use crate::model::{Block, BlockId, Workspace};
use crate::shelf::ShelfId;

/// Conjunctive search criteria. At least one must be present.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    /// Case-insensitive substring of the block comment.
    pub comment_substring: Option<String>,
    /// Exact block type.
    pub block_type: Option<String>,
    /// Exact `(field name, value)` pair.
    pub field_value: Option<(String, String)>,
    /// Only blocks in stacks that belong to this shelf.
    pub shelf: Option<ShelfId>,
}

impl Query {
    pub fn comment(text: impl Into<String>) -> Self {
        Self { comment_substring: Some(text.into()), ..Self::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.comment_substring.is_none()
            && self.block_type.is_none()
            && self.field_value.is_none()
            && self.shelf.is_none()
    }

    /// Whether `block`, living in the stack owned by `shelf`, satisfies
    /// every present criterion.
    pub fn matches(&self, block: &Block, shelf: Option<&ShelfId>) -> bool {
        if let Some(needle) = &self.comment_substring {
            let hit = block
                .comment
                .as_deref()
                .is_some_and(|c| c.to_lowercase().contains(&needle.to_lowercase()));
            if !hit {
                return false;
            }
        }
        if self.block_type.as_ref().is_some_and(|t| *t != block.block_type) {
            return false;
        }
        if let Some((name, value)) = &self.field_value {
            if block.field(name) != Some(value.as_str()) {
                return false;
            }
        }
        if self.shelf.as_ref().is_some_and(|s| Some(s) != shelf) {
            return false;
        }
        true
    }

    fn snippet(&self, block: &Block) -> String {
        if self.comment_substring.is_some() {
            return block.comment.clone().unwrap_or_default();
        }
        if let Some((name, value)) = &self.field_value {
            return format!("{name}={value}");
        }
        block.block_type.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Match {
    pub block: BlockId,
    pub root: BlockId,
    pub shelf: Option<ShelfId>,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("query has no criteria")]
    EmptyQuery,
    #[error("unknown shelf {0}")]
    UnknownShelf(ShelfId),
    #[error("corpus is empty")]
    EmptyCorpus,
}

impl SearchError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyQuery => "empty-query",
            Self::UnknownShelf(_) => "unknown-shelf",
            Self::EmptyCorpus => "empty-corpus",
        }
    }
}

fn check(ws: &Workspace, query: &Query) -> Result<(), SearchError> {
    if query.is_empty() {
        return Err(SearchError::EmptyQuery);
    }
    if let Some(shelf) = &query.shelf {
        if ws.shelves().get(shelf).is_none() {
            return Err(SearchError::UnknownShelf(shelf.clone()));
        }
    }
    Ok(())
}

/// All blocks satisfying `query`, ordered by the handler key of their root
/// and then pre-order within the stack.
pub fn search(ws: &Workspace, query: &Query) -> Result<Vec<Match>, SearchError> {
    check(ws, query)?;
    let mut roots: Vec<&Block> = ws.top_level().iter().filter_map(|id| ws.block(id)).collect();
    roots.sort_by_cached_key(|b| root_key(b));
    let mut out = Vec::new();
    for root in roots {
        let shelf = ws.shelf_of(&root.id);
        for id in ws.subtree(&root.id).unwrap_or_default() {
            let block = &ws.blocks()[&id];
            if query.matches(block, shelf) {
                out.push(Match {
                    block: id,
                    root: root.id.clone(),
                    shelf: shelf.cloned(),
                    snippet: query.snippet(block),
                });
            }
        }
    }
    Ok(out)
}

/// Outcome of a scripted block hunt on the visible canvas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Located {
    pub found: Option<Match>,
    /// Blocks looked at, including the one found.
    pub inspected: usize,
}

/// Walks the visible stacks in canvas order, block by block, until one
/// satisfies `query`. Hidden shelves are never looked at.
pub fn locate(ws: &Workspace, query: &Query) -> Result<Located, SearchError> {
    check(ws, query)?;
    let mut inspected = 0;
    for root in ws.visible_roots() {
        let shelf = ws.shelf_of(&root);
        for id in ws.subtree(&root).unwrap_or_default() {
            inspected += 1;
            let block = &ws.blocks()[&id];
            if query.matches(block, shelf) {
                let found = Match {
                    snippet: query.snippet(block),
                    block: id,
                    root: root.clone(),
                    shelf: shelf.cloned(),
                };
                return Ok(Located { found: Some(found), inspected });
            }
        }
    }
    Ok(Located { found: None, inspected })
}

pub const DEFAULT_THRESHOLD: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub projects: usize,
    pub counts: Vec<usize>,
    pub median: f64,
    pub fraction_over_threshold: f64,
    pub threshold: usize,
}

pub fn corpus_stats(workspaces: &[Workspace], threshold: usize) -> Result<CorpusReport, SearchError> {
    let counts: Vec<usize> = workspaces.iter().map(Workspace::block_count).collect();
    stats_from_counts(counts, threshold)
}

/// [`corpus_stats`] over precomputed block counts, kept in input order.
pub fn stats_from_counts(counts: Vec<usize>, threshold: usize) -> Result<CorpusReport, SearchError> {
    if counts.is_empty() {
        return Err(SearchError::EmptyCorpus);
    }
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    };
    let over = counts.iter().filter(|&&c| c > threshold).count();
    Ok(CorpusReport {
        projects: n,
        fraction_over_threshold: over as f64 / n as f64,
        counts,
        median,
        threshold,
    })
}
