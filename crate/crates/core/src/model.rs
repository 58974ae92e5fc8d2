//! Block workspace: a forest of stacks with the baseline per-block
//! operations (comment, collapse, disable, duplicate).
//!
//! Blocks never share children: every block has at most one parent slot,
//! and a block has a canvas position exactly when it has no parent. Every
//! successful mutation advances [`Workspace::revision`] by one; failed
//! operations leave the workspace untouched.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::error::EditError;
use crate::shelf::ShelfRegistry;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(String);

impl BlockId {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BlockId {
    fn from(value: &str) -> Self {
        Self(value.to_owned())
    }
}

/// Canvas coordinates in workspace pixels. Unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Position {
    pub x: i64,
    pub y: i64,
}

impl Position {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn offset(self, by: Position) -> Position {
        Position::new(self.x.saturating_add(by.x), self.y.saturating_add(by.y))
    }
}

/// A connection point on a parent block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum Slot {
    Value(String),
    Statement(String),
    Next,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Value(name) => write!(f, "value:{name}"),
            Slot::Statement(name) => write!(f, "statement:{name}"),
            Slot::Next => f.write_str("next"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: BlockId,
    pub block_type: String,
    pub fields: BTreeMap<String, String>,
    pub value_inputs: BTreeMap<String, Option<BlockId>>,
    pub statement_inputs: BTreeMap<String, Option<BlockId>>,
    pub next: Option<BlockId>,
    pub comment: Option<String>,
    pub collapsed: bool,
    pub disabled: bool,
    pub position: Option<Position>,
}

impl Block {
    pub fn new(id: BlockId, block_type: impl Into<String>) -> Self {
        Self {
            id,
            block_type: block_type.into(),
            fields: BTreeMap::new(),
            value_inputs: BTreeMap::new(),
            statement_inputs: BTreeMap::new(),
            next: None,
            comment: None,
            collapsed: false,
            disabled: false,
            position: None,
        }
    }

    pub fn field(&self, name: &str) -> Option<&str> {
        self.fields.get(name).map(String::as_str)
    }

    /// The block connected at `slot`, if any.
    pub fn slot(&self, slot: &Slot) -> Option<&BlockId> {
        match slot {
            Slot::Value(name) => self.value_inputs.get(name).and_then(Option::as_ref),
            Slot::Statement(name) => self.statement_inputs.get(name).and_then(Option::as_ref),
            Slot::Next => self.next.as_ref(),
        }
    }

    /// Connected children in canonical order: value inputs, statement
    /// inputs, then `next`.
    pub fn children(&self) -> Vec<(Slot, &BlockId)> {
        let values = self
            .value_inputs
            .iter()
            .filter_map(|(name, child)| child.as_ref().map(|c| (Slot::Value(name.clone()), c)));
        let statements = self
            .statement_inputs
            .iter()
            .filter_map(|(name, child)| child.as_ref().map(|c| (Slot::Statement(name.clone()), c)));
        values
            .chain(statements)
            .chain(self.next.as_ref().map(|c| (Slot::Next, c)))
            .collect()
    }

    fn set_slot(&mut self, slot: &Slot, child: Option<BlockId>) {
        match (slot, child) {
            (Slot::Value(name), Some(c)) => {
                self.value_inputs.insert(name.clone(), Some(c));
            }
            (Slot::Value(name), None) => {
                self.value_inputs.remove(name);
            }
            (Slot::Statement(name), Some(c)) => {
                self.statement_inputs.insert(name.clone(), Some(c));
            }
            (Slot::Statement(name), None) => {
                self.statement_inputs.remove(name);
            }
            (Slot::Next, child) => self.next = child,
        }
    }

    fn remap_children(&mut self, map: &BTreeMap<BlockId, BlockId>) {
        let remap = |id: &mut BlockId| {
            if let Some(new) = map.get(id) {
                *id = new.clone();
            }
        };
        self.value_inputs.values_mut().flatten().for_each(remap);
        self.statement_inputs.values_mut().flatten().for_each(remap);
        if let Some(next) = self.next.as_mut() {
            remap(next);
        }
    }
}

/// The block graph of one screen plus its shelf registry.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    blocks: BTreeMap<BlockId, Block>,
    top_level: Vec<BlockId>,
    pub(crate) shelves: ShelfRegistry,
    revision: u64,
    next_block_seq: u64,
    pub(crate) next_shelf_seq: u64,
}

impl Workspace {
    pub fn new() -> Self {
        Self {
            next_block_seq: 1,
            next_shelf_seq: 1,
            ..Self::default()
        }
    }

    /// Assembles a workspace from raw parts without checking any invariant.
    /// Use [`Workspace::validate`] to inspect the result.
    pub fn from_parts(
        blocks: impl IntoIterator<Item = Block>,
        top_level: Vec<BlockId>,
        shelves: ShelfRegistry,
    ) -> Self {
        let blocks: BTreeMap<BlockId, Block> =
            blocks.into_iter().map(|b| (b.id.clone(), b)).collect();
        let next_block_seq = next_free_seq(blocks.keys().map(BlockId::as_str), 'b');
        let next_shelf_seq = next_free_seq(shelves.iter().map(|s| s.id.as_str()), 's');
        Self {
            blocks,
            top_level,
            shelves,
            revision: 0,
            next_block_seq,
            next_shelf_seq,
        }
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub(crate) fn bump(&mut self) {
        self.revision += 1;
    }

    pub fn blocks(&self) -> &BTreeMap<BlockId, Block> {
        &self.blocks
    }

    pub fn block(&self, id: &BlockId) -> Option<&Block> {
        self.blocks.get(id)
    }

    pub(crate) fn block_mut(&mut self, id: &BlockId) -> Option<&mut Block> {
        self.blocks.get_mut(id)
    }

    pub fn contains(&self, id: &BlockId) -> bool {
        self.blocks.contains_key(id)
    }

    pub fn top_level(&self) -> &[BlockId] {
        &self.top_level
    }

    pub fn is_top_level(&self, id: &BlockId) -> bool {
        self.top_level.contains(id)
    }

    pub fn shelves(&self) -> &ShelfRegistry {
        &self.shelves
    }

    /// Equality of everything that is persisted: blocks, root order and the
    /// shelf registry. Session state such as the revision is ignored.
    pub fn structurally_eq(&self, other: &Workspace) -> bool {
        self.blocks == other.blocks
            && self.top_level == other.top_level
            && self.shelves == other.shelves
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Number of blocks in the stack rooted at `root`, including `root`.
    pub fn block_count_in(&self, root: &BlockId) -> Result<usize, EditError> {
        Ok(self.subtree(root)?.len())
    }

    /// Pre-order listing of `root` and everything reachable from it through
    /// inputs and `next` links.
    pub fn subtree(&self, root: &BlockId) -> Result<Vec<BlockId>, EditError> {
        if !self.contains(root) {
            return Err(EditError::UnknownBlock(root.clone()));
        }
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut stack = vec![root.clone()];
        while let Some(id) = stack.pop() {
            if !seen.insert(id.clone()) {
                continue;
            }
            if let Some(block) = self.blocks.get(&id) {
                for (_, child) in block.children().into_iter().rev() {
                    stack.push(child.clone());
                }
            }
            out.push(id);
        }
        Ok(out)
    }

    /// Map from each connected block to its parent and the slot holding it.
    pub fn parent_index(&self) -> HashMap<BlockId, (BlockId, Slot)> {
        let mut index = HashMap::with_capacity(self.blocks.len());
        for block in self.blocks.values() {
            for (slot, child) in block.children() {
                index
                    .entry(child.clone())
                    .or_insert_with(|| (block.id.clone(), slot));
            }
        }
        index
    }

    pub fn parent_of(&self, id: &BlockId) -> Option<(BlockId, Slot)> {
        self.blocks.values().find_map(|block| {
            block
                .children()
                .into_iter()
                .find(|(_, child)| *child == id)
                .map(|(slot, _)| (block.id.clone(), slot))
        })
    }

    /// The top-level block whose stack contains `id`.
    pub fn root_of(&self, id: &BlockId) -> Result<BlockId, EditError> {
        if !self.contains(id) {
            return Err(EditError::UnknownBlock(id.clone()));
        }
        let parents = self.parent_index();
        let mut current = id.clone();
        let mut steps = 0;
        while let Some((parent, _)) = parents.get(&current) {
            current = parent.clone();
            steps += 1;
            if steps > self.blocks.len() {
                break;
            }
        }
        Ok(current)
    }

    /// Own `disabled` flag OR that of any enclosing block. A block is
    /// enclosed by the block whose input holds its stack; `next` links do
    /// not propagate the flag.
    pub fn effectively_disabled(&self, id: &BlockId) -> bool {
        self.effectively_disabled_with(id, &self.parent_index())
    }

    pub(crate) fn effectively_disabled_with(
        &self,
        id: &BlockId,
        parents: &HashMap<BlockId, (BlockId, Slot)>,
    ) -> bool {
        let mut current = id.clone();
        for _ in 0..=self.blocks.len() {
            if self.blocks.get(&current).is_some_and(|b| b.disabled) {
                return true;
            }
            // climb the `next` chain to the stack head, then to its container
            let mut head = current.clone();
            let container = loop {
                match parents.get(&head) {
                    Some((prev, Slot::Next)) => head = prev.clone(),
                    Some((container, _)) => break Some(container.clone()),
                    None => break None,
                }
            };
            match container {
                Some(c) => current = c,
                None => return false,
            }
        }
        false
    }

    fn fresh_block_id(&mut self) -> BlockId {
        loop {
            let id = BlockId(format!("b{}", self.next_block_seq));
            self.next_block_seq += 1;
            if !self.blocks.contains_key(&id) {
                return id;
            }
        }
    }

    /// Adds a new top-level block and returns its fresh id.
    pub fn add_block<K, V>(
        &mut self,
        block_type: &str,
        fields: impl IntoIterator<Item = (K, V)>,
        position: Position,
    ) -> Result<BlockId, EditError>
    where
        K: Into<String>,
        V: Into<String>,
    {
        if block_type.is_empty() {
            return Err(EditError::EmptyBlockType);
        }
        let id = self.fresh_block_id();
        let mut block = Block::new(id.clone(), block_type);
        block.fields = fields
            .into_iter()
            .map(|(k, v)| (k.into(), v.into()))
            .collect();
        block.position = Some(position);
        self.blocks.insert(id.clone(), block);
        self.top_level.push(id.clone());
        self.bump();
        Ok(id)
    }

    /// Plugs the top-level stack `child` into `slot` of `parent`.
    pub fn connect(&mut self, parent: &BlockId, slot: Slot, child: &BlockId) -> Result<(), EditError> {
        for id in [parent, child] {
            if !self.contains(id) {
                return Err(EditError::UnknownBlock(id.clone()));
            }
        }
        if self.root_of(parent)? == *child {
            return Err(EditError::WouldCreateCycle {
                parent: parent.clone(),
                child: child.clone(),
            });
        }
        if !self.is_top_level(child) {
            return Err(EditError::ChildNotTopLevel(child.clone()));
        }
        if self.shelves.shelf_of(child).is_some() {
            return Err(EditError::ChildShelved(child.clone()));
        }
        if self.blocks[parent].slot(&slot).is_some() {
            return Err(EditError::SlotOccupied {
                parent: parent.clone(),
                slot,
            });
        }
        self.top_level.retain(|id| id != child);
        if let Some(block) = self.blocks.get_mut(child) {
            block.position = None;
        }
        if let Some(block) = self.blocks.get_mut(parent) {
            block.set_slot(&slot, Some(child.clone()));
        }
        self.bump();
        Ok(())
    }

    /// Detaches `child` (with everything below it) into a new top-level
    /// stack at `position`. The vacated input slot is removed.
    pub fn disconnect(&mut self, child: &BlockId, position: Position) -> Result<(), EditError> {
        if !self.contains(child) {
            return Err(EditError::UnknownBlock(child.clone()));
        }
        let Some((parent, slot)) = self.parent_of(child) else {
            return Err(EditError::AlreadyTopLevel(child.clone()));
        };
        if let Some(block) = self.blocks.get_mut(&parent) {
            block.set_slot(&slot, None);
        }
        if let Some(block) = self.blocks.get_mut(child) {
            block.position = Some(position);
        }
        self.top_level.push(child.clone());
        self.bump();
        Ok(())
    }

    pub fn set_comment(&mut self, id: &BlockId, comment: Option<String>) -> Result<(), EditError> {
        let block = self
            .blocks
            .get_mut(id)
            .ok_or_else(|| EditError::UnknownBlock(id.clone()))?;
        block.comment = comment;
        self.bump();
        Ok(())
    }

    /// Collapsing is only allowed on top-level blocks; expanding is allowed
    /// anywhere so that nested collapsed blocks read from files can be fixed.
    pub fn set_collapsed(&mut self, id: &BlockId, collapsed: bool) -> Result<(), EditError> {
        if !self.contains(id) {
            return Err(EditError::UnknownBlock(id.clone()));
        }
        if collapsed && !self.is_top_level(id) {
            return Err(EditError::CollapseOnNestedBlock(id.clone()));
        }
        if let Some(block) = self.blocks.get_mut(id) {
            block.collapsed = collapsed;
        }
        self.bump();
        Ok(())
    }

    pub fn set_disabled(&mut self, id: &BlockId, disabled: bool) -> Result<(), EditError> {
        let block = self
            .blocks
            .get_mut(id)
            .ok_or_else(|| EditError::UnknownBlock(id.clone()))?;
        block.disabled = disabled;
        self.bump();
        Ok(())
    }

    /// Deep-copies the stack at `root` with fresh ids. The copy becomes a
    /// new unshelved top-level stack at `root`'s position plus `offset`.
    /// Returns the bijection from copied ids to new ids.
    pub fn duplicate_subtree(
        &mut self,
        root: &BlockId,
        offset: Position,
    ) -> Result<BTreeMap<BlockId, BlockId>, EditError> {
        if !self.contains(root) {
            return Err(EditError::UnknownBlock(root.clone()));
        }
        if !self.is_top_level(root) {
            return Err(EditError::NotTopLevel(root.clone()));
        }
        let (_, mapping) = self.copy_stack(root, offset)?;
        self.bump();
        Ok(mapping)
    }

    /// Copy without bumping the revision; callers bump once per operation.
    pub(crate) fn copy_stack(
        &mut self,
        root: &BlockId,
        offset: Position,
    ) -> Result<(BlockId, BTreeMap<BlockId, BlockId>), EditError> {
        let originals = self.subtree(root)?;
        let mapping: BTreeMap<BlockId, BlockId> = originals
            .iter()
            .map(|old| (old.clone(), self.fresh_block_id()))
            .collect();
        for old in &originals {
            let mut copy = self.blocks[old].clone();
            copy.id = mapping[old].clone();
            copy.remap_children(&mapping);
            if old == root {
                copy.position = copy.position.map(|p| p.offset(offset));
            }
            self.blocks.insert(copy.id.clone(), copy);
        }
        let new_root = mapping[root].clone();
        self.top_level.push(new_root.clone());
        Ok((new_root, mapping))
    }

    /// Inserts whole stacks taken from another document, renaming every
    /// block with a fresh id. `roots` are appended to the top level in order.
    pub(crate) fn insert_forest(
        &mut self,
        roots: &[BlockId],
        blocks: &BTreeMap<BlockId, Block>,
    ) -> BTreeMap<BlockId, BlockId> {
        let mut order = Vec::new();
        for root in roots {
            let mut stack = vec![root.clone()];
            while let Some(id) = stack.pop() {
                if let Some(block) = blocks.get(&id) {
                    for (_, child) in block.children().into_iter().rev() {
                        stack.push(child.clone());
                    }
                    order.push(id);
                }
            }
        }
        let mapping: BTreeMap<BlockId, BlockId> = order
            .iter()
            .map(|old| (old.clone(), self.fresh_block_id()))
            .collect();
        for old in &order {
            let mut copy = blocks[old].clone();
            copy.id = mapping[old].clone();
            copy.remap_children(&mapping);
            self.blocks.insert(copy.id.clone(), copy);
        }
        self.top_level
            .extend(roots.iter().filter_map(|r| mapping.get(r).cloned()));
        mapping
    }

    /// Checks every block-model and shelf invariant. Never mutates; an
    /// empty result means the workspace is well formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let mut parent_count: HashMap<&BlockId, usize> = HashMap::new();

        for (key, block) in &self.blocks {
            if key != &block.id {
                diags.push(Diagnostic::error(
                    "id-mismatch",
                    Some(key),
                    format!("block stored under {key} carries id {}", block.id),
                ));
            }
            if block.id.as_str().is_empty() {
                diags.push(Diagnostic::error("empty-id", Some(key), "block id is empty"));
            }
            if block.block_type.is_empty() {
                diags.push(Diagnostic::error("empty-type", Some(key), "block type is empty"));
            }
            let texts = block
                .fields
                .iter()
                .flat_map(|(k, v)| [k.as_str(), v.as_str()])
                .chain(block.value_inputs.keys().map(String::as_str))
                .chain(block.statement_inputs.keys().map(String::as_str))
                .chain(block.comment.as_deref())
                .chain([block.id.as_str(), block.block_type.as_str()]);
            if texts.into_iter().any(|t| !is_xml_text(t)) {
                diags.push(Diagnostic::error(
                    "invalid-text",
                    Some(key),
                    "text contains characters that cannot be stored in XML",
                ));
            }
            for (slot, child) in block.children() {
                if child == &block.id {
                    diags.push(Diagnostic::error(
                        "cycle",
                        Some(key),
                        format!("block {key} references itself at {slot}"),
                    ));
                } else if !self.blocks.contains_key(child) {
                    diags.push(Diagnostic::error(
                        "dangling-ref",
                        Some(key),
                        format!("{slot} of {key} references unknown block {child}"),
                    ));
                    continue;
                }
                *parent_count.entry(child).or_default() += 1;
            }
        }

        for (child, count) in &parent_count {
            if *count > 1 {
                diags.push(Diagnostic::error(
                    "multiple-parents",
                    Some(child),
                    format!("block {child} is referenced by {count} parent slots"),
                ));
            }
        }

        let mut seen_roots = HashSet::new();
        for root in &self.top_level {
            if !seen_roots.insert(root) {
                diags.push(Diagnostic::error(
                    "duplicate-root",
                    Some(root),
                    format!("{root} listed twice as top-level"),
                ));
                continue;
            }
            let Some(block) = self.blocks.get(root) else {
                diags.push(Diagnostic::error(
                    "dangling-ref",
                    Some(root),
                    format!("top-level list references unknown block {root}"),
                ));
                continue;
            };
            if parent_count.contains_key(root) {
                diags.push(Diagnostic::error(
                    "root-has-parent",
                    Some(root),
                    format!("top-level block {root} is also connected under another block"),
                ));
            }
            if block.position.is_none() {
                diags.push(Diagnostic::error(
                    "missing-position",
                    Some(root),
                    format!("top-level block {root} has no position"),
                ));
            }
        }
        for (id, block) in &self.blocks {
            if !seen_roots.contains(id) {
                if !parent_count.contains_key(id) {
                    diags.push(Diagnostic::error(
                        "missing-root",
                        Some(id),
                        format!("block {id} has no parent but is not top-level"),
                    ));
                }
                if block.position.is_some() {
                    diags.push(Diagnostic::error(
                        "unexpected-position",
                        Some(id),
                        format!("nested block {id} carries a position"),
                    ));
                }
            }
        }

        let mut reached: HashSet<&BlockId> = HashSet::new();
        for root in &self.top_level {
            let mut stack = vec![root];
            while let Some(id) = stack.pop() {
                if !reached.insert(id) {
                    continue;
                }
                if let Some(block) = self.blocks.get(id) {
                    stack.extend(block.children().into_iter().map(|(_, c)| c));
                }
            }
        }
        for id in self.blocks.keys() {
            if !reached.contains(id) && parent_count.contains_key(id) {
                diags.push(Diagnostic::error(
                    "cycle",
                    Some(id),
                    format!("block {id} is not reachable from any top-level block"),
                ));
            }
        }

        diags.extend(self.shelves.validate(self));
        diags
    }
}

/// Smallest sequence number above every `<prefix><n>` id already in use.
fn next_free_seq<'a>(ids: impl Iterator<Item = &'a str>, prefix: char) -> u64 {
    ids.filter_map(|id| id.strip_prefix(prefix)?.parse::<u64>().ok())
        .max()
        .map_or(1, |max| max.saturating_add(1))
}

/// True when every character is allowed in XML 1.0 character data.
pub(crate) fn is_xml_text(text: &str) -> bool {
    text.chars().all(|c| {
        matches!(c, '\t' | '\n' | '\r')
            || (c >= ' ' && c != '\u{FFFE}' && c != '\u{FFFF}')
    })
}
