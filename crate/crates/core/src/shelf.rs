//! Shelves: named groups of top-level stacks, the ShelfBox registry, and
//! the five shelf functions (visibility, minimize/maximize,
//! activate/deactivate, duplicate, export/import).
//!
//! Membership is per top-level stack and exclusive: a root belongs to at
//! most one shelf. Visibility and minimization are presentation state;
//! deactivation is the only shelf function that changes compiled output.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diag::Diagnostic;
use crate::error::EditError;
use crate::model::{Block, BlockId, Position, Workspace};
use crate::semantics::BlockSemantics;

/// Export documents this build reads and writes.
pub const EXPORT_FORMAT_VERSION: u32 = 1;

/// Offset applied to copies made by [`Workspace::duplicate_shelf`] when
/// callers have no preference.
pub const DEFAULT_DUPLICATE_OFFSET: Position = Position::new(40, 40);

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShelfId(String);

impl ShelfId {
    pub fn new(value: impl Into<String>) -> Self {
        Self(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ShelfId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ShelfId {
    fn from(value: &str) -> Self {
        Self(value.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shelf {
    pub id: ShelfId,
    pub name: String,
    pub members: Vec<BlockId>,
    pub visible: bool,
}

/// Ordered collection of shelves (the ShelfBox).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShelfRegistry {
    shelves: Vec<Shelf>,
}

impl ShelfRegistry {
    /// Registry with the given shelves, unchecked.
    pub fn from_shelves(shelves: Vec<Shelf>) -> Self {
        Self { shelves }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Shelf> {
        self.shelves.iter()
    }

    pub fn len(&self) -> usize {
        self.shelves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shelves.is_empty()
    }

    pub fn get(&self, id: &ShelfId) -> Option<&Shelf> {
        self.shelves.iter().find(|s| &s.id == id)
    }

    fn get_mut(&mut self, id: &ShelfId) -> Result<&mut Shelf, EditError> {
        self.shelves
            .iter_mut()
            .find(|s| &s.id == id)
            .ok_or_else(|| EditError::UnknownShelf(id.clone()))
    }

    fn require(&self, id: &ShelfId) -> Result<&Shelf, EditError> {
        self.get(id).ok_or_else(|| EditError::UnknownShelf(id.clone()))
    }

    /// Shelves whose name is exactly `name`, in registry order.
    pub fn by_name<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Shelf> + 'a {
        self.shelves.iter().filter(move |s| s.name == name)
    }

    pub fn shelf_of(&self, root: &BlockId) -> Option<&ShelfId> {
        self.shelves
            .iter()
            .find(|s| s.members.contains(root))
            .map(|s| &s.id)
    }

    pub(crate) fn validate(&self, ws: &Workspace) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let mut ids = HashSet::new();
        let mut shelved: HashSet<&BlockId> = HashSet::new();
        for shelf in &self.shelves {
            if shelf.id.as_str().is_empty() {
                diags.push(Diagnostic::error("empty-shelf-id", None, "shelf id is empty"));
            }
            if !ids.insert(&shelf.id) {
                diags.push(Diagnostic::error(
                    "duplicate-shelf-id",
                    None,
                    format!("shelf id {} is used twice", shelf.id),
                ));
            }
            if shelf.name.is_empty() {
                diags.push(Diagnostic::error(
                    "empty-shelf-name",
                    None,
                    format!("shelf {} has an empty name", shelf.id),
                ));
            }
            if !crate::model::is_xml_text(&shelf.name) || !crate::model::is_xml_text(shelf.id.as_str()) {
                diags.push(Diagnostic::error(
                    "invalid-text",
                    None,
                    format!("shelf {} has characters that cannot be stored in XML", shelf.id),
                ));
            }
            for member in &shelf.members {
                if !ws.contains(member) {
                    diags.push(Diagnostic::error(
                        "dangling-ref",
                        Some(member),
                        format!("shelf {} lists unknown block {member}", shelf.id),
                    ));
                } else if !ws.is_top_level(member) {
                    diags.push(Diagnostic::error(
                        "member-not-root",
                        Some(member),
                        format!("shelf {} lists nested block {member}", shelf.id),
                    ));
                }
                if !shelved.insert(member) {
                    diags.push(Diagnostic::error(
                        "shelved-twice",
                        Some(member),
                        format!("block {member} appears in more than one shelf slot"),
                    ));
                }
            }
        }
        diags
    }
}

/// Whether all, some or none of a shelf's member roots carry a flag.
/// An empty shelf reports `None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coverage {
    All,
    Some,
    None,
}

impl Coverage {
    fn of(flags: impl IntoIterator<Item = bool>) -> Coverage {
        let (mut set, mut total) = (0usize, 0usize);
        for flag in flags {
            total += 1;
            set += usize::from(flag);
        }
        match set {
            0 => Coverage::None,
            n if n == total => Coverage::All,
            _ => Coverage::Some,
        }
    }
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coverage::All => "all",
            Coverage::Some => "some",
            Coverage::None => "none",
        })
    }
}

/// One ShelfBox row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShelfStatus {
    pub shelf: ShelfId,
    pub name: String,
    pub member_roots: usize,
    pub total_blocks: usize,
    pub visible: bool,
    pub collapse_state: Coverage,
    pub active_state: Coverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefKind {
    Procedure,
    Variable,
    Component,
}

impl RefKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RefKind::Procedure => "procedure",
            RefKind::Variable => "variable",
            RefKind::Component => "component",
        }
    }
}

impl fmt::Display for RefKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RefKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "procedure" => Ok(RefKind::Procedure),
            "variable" => Ok(RefKind::Variable),
            "component" => Ok(RefKind::Component),
            other => Err(format!("unknown reference kind {other:?}")),
        }
    }
}

/// A name used inside an exported shelf but defined outside it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnresolvedRef {
    pub kind: RefKind,
    pub name: String,
}

/// Self-contained document carrying one shelf's stacks between projects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShelfExport {
    pub format_version: u32,
    pub shelf_name: String,
    /// Member stack heads in shelf order.
    pub roots: Vec<BlockId>,
    pub blocks: BTreeMap<BlockId, Block>,
    /// Sorted by kind, then name.
    pub unresolved_refs: Vec<UnresolvedRef>,
}

impl ShelfExport {
    /// Names referenced by `blocks` but not defined among them. Components
    /// are never defined by blocks, so every referenced component is listed.
    pub fn compute_unresolved(blocks: &BTreeMap<BlockId, Block>) -> Vec<UnresolvedRef> {
        let semantics = BlockSemantics::builtin();
        let mut defined = BTreeSet::new();
        let mut used = BTreeSet::new();
        for block in blocks.values() {
            for (kind, name, defines) in semantics.names(block) {
                let r = UnresolvedRef { kind, name: name.to_owned() };
                if defines {
                    defined.insert(r);
                } else {
                    used.insert(r);
                }
            }
        }
        used.difference(&defined).cloned().collect()
    }
}

/// How [`Workspace::import_shelf`] treats procedure-name collisions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamePolicy {
    /// Rename colliding imported procedures to `name2`, `name3`, ...
    #[default]
    Suffix,
    /// Keep imported names even when they collide.
    Keep,
}

impl FromStr for NamePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "suffix" => Ok(NamePolicy::Suffix),
            "keep" => Ok(NamePolicy::Keep),
            other => Err(format!("unknown name policy {other:?} (expected suffix or keep)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportReport {
    pub shelf: ShelfId,
    pub shelf_name: String,
    /// Document block id to freshly assigned workspace id.
    pub id_remap: BTreeMap<BlockId, BlockId>,
    /// Procedure renames (old, new) applied under [`NamePolicy::Suffix`].
    pub renames: Vec<(String, String)>,
    pub warnings: Vec<Diagnostic>,
}

impl Workspace {
    fn fresh_shelf_id(&mut self) -> ShelfId {
        loop {
            let id = ShelfId(format!("s{}", self.next_shelf_seq));
            self.next_shelf_seq += 1;
            if self.shelves.get(&id).is_none() {
                return id;
            }
        }
    }

    fn check_unshelved_roots(&self, roots: &[BlockId]) -> Result<(), EditError> {
        let mut seen = HashSet::new();
        for root in roots {
            if !self.contains(root) {
                return Err(EditError::UnknownBlock(root.clone()));
            }
            if !self.is_top_level(root) {
                return Err(EditError::NotTopLevel(root.clone()));
            }
            if let Some(shelf) = self.shelves.shelf_of(root) {
                return Err(EditError::AlreadyShelved { block: root.clone(), shelf: shelf.clone() });
            }
            if !seen.insert(root) {
                return Err(EditError::AlreadyShelved {
                    block: root.clone(),
                    shelf: ShelfId::new(""),
                });
            }
        }
        Ok(())
    }

    /// Creates a visible shelf over `roots`. Duplicate names are allowed.
    pub fn create_shelf(&mut self, name: &str, roots: &[BlockId]) -> Result<ShelfId, EditError> {
        if name.trim().is_empty() {
            return Err(EditError::EmptyName);
        }
        self.check_unshelved_roots(roots)?;
        let id = self.fresh_shelf_id();
        self.shelves.shelves.push(Shelf {
            id: id.clone(),
            name: name.to_owned(),
            members: roots.to_vec(),
            visible: true,
        });
        self.bump();
        Ok(id)
    }

    pub fn assign_to_shelf(&mut self, shelf: &ShelfId, roots: &[BlockId]) -> Result<(), EditError> {
        self.shelves.require(shelf)?;
        self.check_unshelved_roots(roots)?;
        self.shelves.get_mut(shelf)?.members.extend(roots.iter().cloned());
        self.bump();
        Ok(())
    }

    pub fn remove_from_shelf(&mut self, shelf: &ShelfId, roots: &[BlockId]) -> Result<(), EditError> {
        let current = self.shelves.require(shelf)?;
        for root in roots {
            if !self.contains(root) {
                return Err(EditError::UnknownBlock(root.clone()));
            }
            if !current.members.contains(root) {
                return Err(EditError::NotAMember { block: root.clone(), shelf: shelf.clone() });
            }
        }
        self.shelves.get_mut(shelf)?.members.retain(|m| !roots.contains(m));
        self.bump();
        Ok(())
    }

    pub fn shelf_of(&self, root: &BlockId) -> Option<&ShelfId> {
        self.shelves.shelf_of(root)
    }

    pub fn set_shelf_visibility(&mut self, shelf: &ShelfId, visible: bool) -> Result<(), EditError> {
        self.shelves.get_mut(shelf)?.visible = visible;
        self.bump();
        Ok(())
    }

    /// Top-level roots in canvas order, minus members of hidden shelves.
    pub fn visible_roots(&self) -> Vec<BlockId> {
        let hidden: HashSet<&BlockId> = self
            .shelves
            .iter()
            .filter(|s| !s.visible)
            .flat_map(|s| s.members.iter())
            .collect();
        self.top_level()
            .iter()
            .filter(|r| !hidden.contains(r))
            .cloned()
            .collect()
    }

    fn set_member_flag(
        &mut self,
        shelf: &ShelfId,
        apply: impl Fn(&mut Block),
    ) -> Result<(), EditError> {
        let members = self.shelves.require(shelf)?.members.clone();
        for member in &members {
            if let Some(block) = self.block_mut(member) {
                apply(block);
            }
        }
        self.bump();
        Ok(())
    }

    /// Collapses every member root. Minimized stacks stay on the canvas.
    pub fn minimize_shelf(&mut self, shelf: &ShelfId) -> Result<(), EditError> {
        self.set_member_flag(shelf, |b| b.collapsed = true)
    }

    pub fn maximize_shelf(&mut self, shelf: &ShelfId) -> Result<(), EditError> {
        self.set_member_flag(shelf, |b| b.collapsed = false)
    }

    /// Enables every member root; nested blocks follow through the
    /// effective-disabled rule.
    pub fn activate_shelf(&mut self, shelf: &ShelfId) -> Result<(), EditError> {
        self.set_member_flag(shelf, |b| b.disabled = false)
    }

    pub fn deactivate_shelf(&mut self, shelf: &ShelfId) -> Result<(), EditError> {
        self.set_member_flag(shelf, |b| b.disabled = true)
    }

    /// Deep-copies every member stack into a new shelf named
    /// `Copy of <name>`. The original shelf and its blocks are untouched.
    pub fn duplicate_shelf(&mut self, shelf: &ShelfId, offset: Position) -> Result<ShelfId, EditError> {
        let original = self.shelves.require(shelf)?.clone();
        let mut copies = Vec::with_capacity(original.members.len());
        for member in &original.members {
            let (copy, _) = self.copy_stack(member, offset)?;
            copies.push(copy);
        }
        let id = self.fresh_shelf_id();
        self.shelves.shelves.push(Shelf {
            id: id.clone(),
            name: format!("Copy of {}", original.name),
            members: copies,
            visible: true,
        });
        self.bump();
        Ok(id)
    }

    pub fn export_shelf(&self, shelf: &ShelfId) -> Result<ShelfExport, EditError> {
        let shelf = self.shelves.require(shelf)?;
        let mut blocks = BTreeMap::new();
        for member in &shelf.members {
            for id in self.subtree(member)? {
                blocks.insert(id.clone(), self.blocks()[&id].clone());
            }
        }
        let unresolved_refs = ShelfExport::compute_unresolved(&blocks);
        Ok(ShelfExport {
            format_version: EXPORT_FORMAT_VERSION,
            shelf_name: shelf.name.clone(),
            roots: shelf.members.clone(),
            blocks,
            unresolved_refs,
        })
    }

    /// Inserts an exported shelf with freshly remapped block ids.
    pub fn import_shelf(
        &mut self,
        doc: &ShelfExport,
        policy: NamePolicy,
    ) -> Result<(ShelfId, ImportReport), EditError> {
        if doc.format_version != EXPORT_FORMAT_VERSION {
            return Err(EditError::UnsupportedVersion(doc.format_version));
        }
        let problems = check_export(doc);
        if !problems.is_empty() {
            return Err(EditError::MalformedDocument(problems));
        }

        let semantics = BlockSemantics::builtin();
        let mut target_names: BTreeSet<(RefKind, String)> = BTreeSet::new();
        let mut target_components = BTreeSet::new();
        for block in self.blocks().values() {
            for (kind, name, defines) in semantics.names(block) {
                if defines {
                    target_names.insert((kind, name.to_owned()));
                } else if kind == RefKind::Component {
                    target_components.insert(name.to_owned());
                }
            }
        }
        let existing_procs: BTreeSet<&str> = target_names
            .iter()
            .filter(|(k, _)| *k == RefKind::Procedure)
            .map(|(_, n)| n.as_str())
            .collect();

        let mut blocks = doc.blocks.clone();
        let mut renames: Vec<(String, String)> = Vec::new();
        let mut warnings = Vec::new();
        let imported_defs: BTreeSet<String> = blocks
            .values()
            .flat_map(|b| semantics.names(b))
            .filter(|(kind, _, defines)| *defines && *kind == RefKind::Procedure)
            .map(|(_, name, _)| name.to_owned())
            .collect();
        let colliding: Vec<&String> = imported_defs
            .iter()
            .filter(|n| existing_procs.contains(n.as_str()))
            .collect();
        match policy {
            NamePolicy::Suffix => {
                let mut taken: BTreeSet<String> = existing_procs
                    .iter()
                    .map(|s| (*s).to_owned())
                    .chain(imported_defs.iter().cloned())
                    .collect();
                for name in colliding {
                    let fresh = (2u64..)
                        .map(|n| format!("{name}{n}"))
                        .find(|candidate| !taken.contains(candidate))
                        .unwrap_or_else(|| name.clone());
                    taken.insert(fresh.clone());
                    warnings.push(Diagnostic::warning(
                        "procedure-renamed",
                        None,
                        format!("imported procedure {name} renamed to {fresh}"),
                    ));
                    renames.push((name.clone(), fresh));
                }
                let lookup: BTreeMap<&str, &str> =
                    renames.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                for block in blocks.values_mut() {
                    let field = match block.block_type.as_str() {
                        "procedures_defnoreturn" | "procedures_defreturn" => "NAME",
                        "procedures_callnoreturn" | "procedures_callreturn" => "PROCNAME",
                        _ => continue,
                    };
                    if let Some(value) = block.fields.get_mut(field) {
                        if let Some(new) = lookup.get(value.as_str()) {
                            *value = (*new).to_owned();
                        }
                    }
                }
            }
            NamePolicy::Keep => {
                for name in colliding {
                    warnings.push(Diagnostic::warning(
                        "procedure-collision",
                        None,
                        format!("imported procedure {name} duplicates an existing definition"),
                    ));
                }
            }
        }

        for r in &doc.unresolved_refs {
            let satisfied = match r.kind {
                RefKind::Component => target_components.contains(&r.name),
                kind => target_names.contains(&(kind, r.name.clone())),
            };
            if !satisfied {
                warnings.push(Diagnostic::warning(
                    "unresolved-ref",
                    None,
                    format!("{} {} is not defined in this workspace", r.kind, r.name),
                ));
            }
        }

        let shelf_name = if self.shelves.by_name(&doc.shelf_name).next().is_some() {
            format!("{} (imported)", doc.shelf_name)
        } else {
            doc.shelf_name.clone()
        };
        let id_remap = self.insert_forest(&doc.roots, &blocks);
        let members = doc.roots.iter().map(|r| id_remap[r].clone()).collect();
        let shelf = self.fresh_shelf_id();
        self.shelves.shelves.push(Shelf {
            id: shelf.clone(),
            name: shelf_name.clone(),
            members,
            visible: true,
        });
        self.bump();
        let report = ImportReport {
            shelf: shelf.clone(),
            shelf_name,
            id_remap,
            renames,
            warnings,
        };
        Ok((shelf, report))
    }

    /// One row per shelf, in registry order.
    pub fn shelf_box(&self) -> Vec<ShelfStatus> {
        self.shelves
            .iter()
            .map(|shelf| {
                let members: Vec<&Block> =
                    shelf.members.iter().filter_map(|m| self.block(m)).collect();
                ShelfStatus {
                    shelf: shelf.id.clone(),
                    name: shelf.name.clone(),
                    member_roots: shelf.members.len(),
                    total_blocks: shelf
                        .members
                        .iter()
                        .map(|m| self.block_count_in(m).unwrap_or(0))
                        .sum(),
                    visible: shelf.visible,
                    collapse_state: Coverage::of(members.iter().map(|b| b.collapsed)),
                    active_state: Coverage::of(members.iter().map(|b| !b.disabled)),
                }
            })
            .collect()
    }
}

/// Structural checks an export must pass before import.
fn check_export(doc: &ShelfExport) -> Vec<Diagnostic> {
    let mut problems = Vec::new();
    if doc.shelf_name.trim().is_empty() {
        problems.push(Diagnostic::error("empty-shelf-name", None, "export has no shelf name"));
    }
    let view = Workspace::from_parts(
        doc.blocks.values().cloned(),
        doc.roots.clone(),
        ShelfRegistry::default(),
    );
    problems.extend(view.validate().into_iter().filter(Diagnostic::is_error));
    let recomputed = ShelfExport::compute_unresolved(&doc.blocks);
    let mut declared = doc.unresolved_refs.clone();
    declared.sort();
    declared.dedup();
    if declared != recomputed {
        problems.push(Diagnostic::error(
            "unresolved-mismatch",
            None,
            "declared unresolved references differ from those used by the blocks",
        ));
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws_with_roots(n: usize) -> (Workspace, Vec<BlockId>) {
        let mut ws = Workspace::new();
        let roots = (0..n)
            .map(|i| {
                let i = i as i64;
                ws.add_block(
                    "component_event",
                    [("COMPONENT", format!("Button{i}")), ("EVENT", "Click".to_owned())],
                    Position::new(0, 50 * i),
                )
                .unwrap()
            })
            .collect();
        (ws, roots)
    }

    #[test]
    fn create_and_list() {
        let (mut ws, roots) = ws_with_roots(3);
        let s = ws.create_shelf("Buttons", &roots[..2]).unwrap();
        let rows = ws.shelf_box();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].shelf, s);
        assert_eq!(rows[0].member_roots, 2);
        assert!(rows[0].visible);
        assert_eq!(rows[0].collapse_state, Coverage::None);
        assert_eq!(rows[0].active_state, Coverage::All);
    }

    #[test]
    fn create_errors() {
        let (mut ws, roots) = ws_with_roots(2);
        assert_eq!(ws.create_shelf("  ", &[]), Err(EditError::EmptyName));
        let s = ws.create_shelf("A", &roots[..1]).unwrap();
        assert_eq!(
            ws.create_shelf("B", &roots[..1]),
            Err(EditError::AlreadyShelved { block: roots[0].clone(), shelf: s })
        );
        let ghost = BlockId::from("ghost");
        assert_eq!(ws.create_shelf("B", std::slice::from_ref(&ghost)), Err(EditError::UnknownBlock(ghost)));
        assert!(matches!(
            ws.create_shelf("B", &[roots[1].clone(), roots[1].clone()]),
            Err(EditError::AlreadyShelved { .. })
        ));
    }

    #[test]
    fn empty_shelf_is_valid() {
        let mut ws = Workspace::new();
        let s = ws.create_shelf("Empty", &[]).unwrap();
        let row = &ws.shelf_box()[0];
        assert_eq!(row.total_blocks, 0);
        assert_eq!(row.active_state, Coverage::None);
        let dup = ws.duplicate_shelf(&s, DEFAULT_DUPLICATE_OFFSET).unwrap();
        assert_eq!(ws.shelves().get(&dup).unwrap().name, "Copy of Empty");
        let export = ws.export_shelf(&s).unwrap();
        assert!(export.blocks.is_empty());
        assert!(export.unresolved_refs.is_empty());
    }

    #[test]
    fn nested_blocks_cannot_be_shelved() {
        let (mut ws, roots) = ws_with_roots(1);
        let call = ws
            .add_block("procedures_callnoreturn", [("PROCNAME", "p")], Position::default())
            .unwrap();
        ws.connect(&roots[0], crate::model::Slot::Statement("DO".into()), &call).unwrap();
        assert_eq!(ws.create_shelf("X", std::slice::from_ref(&call)), Err(EditError::NotTopLevel(call)));
    }

    #[test]
    fn assign_remove_inverse() {
        let (mut ws, roots) = ws_with_roots(2);
        let s = ws.create_shelf("S", &[]).unwrap();
        ws.assign_to_shelf(&s, &roots).unwrap();
        assert_eq!(ws.shelf_of(&roots[1]), Some(&s));
        ws.remove_from_shelf(&s, &roots).unwrap();
        assert_eq!(ws.shelf_of(&roots[1]), None);
        assert_eq!(
            ws.remove_from_shelf(&s, &roots[..1]),
            Err(EditError::NotAMember { block: roots[0].clone(), shelf: s.clone() })
        );
        let bogus = ShelfId::from("s99");
        assert_eq!(ws.assign_to_shelf(&bogus, &roots), Err(EditError::UnknownShelf(bogus)));
    }

    #[test]
    fn visibility_and_minimize_are_independent() {
        let (mut ws, roots) = ws_with_roots(3);
        let s = ws.create_shelf("S", &roots[1..]).unwrap();
        ws.minimize_shelf(&s).unwrap();
        assert_eq!(ws.visible_roots(), roots);
        assert_eq!(ws.shelf_box()[0].collapse_state, Coverage::All);
        ws.set_collapsed(&roots[1], false).unwrap();
        assert_eq!(ws.shelf_box()[0].collapse_state, Coverage::Some);
        ws.set_shelf_visibility(&s, false).unwrap();
        assert_eq!(ws.visible_roots(), &roots[..1]);
    }

    #[test]
    fn deactivate_sets_active_state() {
        let (mut ws, roots) = ws_with_roots(2);
        let s = ws.create_shelf("S", &roots).unwrap();
        let rev = ws.revision();
        ws.deactivate_shelf(&s).unwrap();
        assert_eq!(ws.revision(), rev + 1);
        assert_eq!(ws.shelf_box()[0].active_state, Coverage::None);
        ws.set_disabled(&roots[0], false).unwrap();
        assert_eq!(ws.shelf_box()[0].active_state, Coverage::Some);
    }

    #[test]
    fn renames_pick_smallest_free_suffix() {
        let mut source = Workspace::new();
        let def = source
            .add_block("procedures_defnoreturn", [("NAME", "foo")], Position::default())
            .unwrap();
        let caller = source
            .add_block("component_event", [("COMPONENT", "B"), ("EVENT", "Click")], Position::default())
            .unwrap();
        let call = source
            .add_block("procedures_callnoreturn", [("PROCNAME", "foo")], Position::default())
            .unwrap();
        source
            .connect(&caller, crate::model::Slot::Statement("DO".into()), &call)
            .unwrap();
        let s = source.create_shelf("Lib", &[def, caller]).unwrap();
        let doc = source.export_shelf(&s).unwrap();

        let mut target = Workspace::new();
        for name in ["foo", "foo2"] {
            target
                .add_block("procedures_defnoreturn", [("NAME", name)], Position::default())
                .unwrap();
        }
        let (_, report) = target.import_shelf(&doc, NamePolicy::Suffix).unwrap();
        assert_eq!(report.renames, vec![("foo".to_owned(), "foo3".to_owned())]);
        let names: Vec<_> = target
            .blocks()
            .values()
            .filter_map(|b| b.field("NAME").or(b.field("PROCNAME")))
            .collect();
        assert_eq!(names.iter().filter(|n| **n == "foo3").count(), 2);

        let mut kept = Workspace::new();
        kept.add_block("procedures_defnoreturn", [("NAME", "foo")], Position::default())
            .unwrap();
        let (_, report) = kept.import_shelf(&doc, NamePolicy::Keep).unwrap();
        assert!(report.renames.is_empty());
        assert_eq!(report.warnings[0].code, "procedure-collision");
    }

    #[test]
    fn import_rejects_bad_documents() {
        let (mut ws, roots) = ws_with_roots(1);
        let s = ws.create_shelf("S", &roots).unwrap();
        let mut doc = ws.export_shelf(&s).unwrap();
        doc.format_version = 2;
        assert_eq!(ws.import_shelf(&doc, NamePolicy::Suffix), Err(EditError::UnsupportedVersion(2)));
        doc.format_version = 1;
        doc.blocks.values_mut().next().unwrap().next = Some("elsewhere".into());
        let err = ws.import_shelf(&doc, NamePolicy::Suffix).unwrap_err();
        assert_eq!(err.code(), "malformed-document");
        let rev = ws.revision();
        assert_eq!(ws.revision(), rev);
    }

    #[test]
    fn import_suffixes_existing_shelf_name() {
        let (mut ws, roots) = ws_with_roots(1);
        let s = ws.create_shelf("S", &roots).unwrap();
        let doc = ws.export_shelf(&s).unwrap();
        let (id, report) = ws.import_shelf(&doc, NamePolicy::Suffix).unwrap();
        assert_eq!(report.shelf_name, "S (imported)");
        assert_eq!(ws.shelves().get(&id).unwrap().name, "S (imported)");
    }
}
