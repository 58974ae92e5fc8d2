//! Brute-force reference implementations. None of these call into the
//! engine's own traversal, search or reference-scan code.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use blockshelf_core::{Block, BlockId, Query, ShelfId, ShelfRegistry, Workspace};

fn children_of(block: &Block) -> Vec<BlockId> {
    let mut out = Vec::new();
    out.extend(block.value_inputs.values().flatten().cloned());
    out.extend(block.statement_inputs.values().flatten().cloned());
    out.extend(block.next.iter().cloned());
    out
}

/// Blocks reachable from `root`, by plain recursion.
pub fn reachable(ws: &Workspace, root: &BlockId) -> BTreeSet<BlockId> {
    fn walk(ws: &Workspace, id: &BlockId, out: &mut BTreeSet<BlockId>) {
        if !out.insert(id.clone()) {
            return;
        }
        if let Some(block) = ws.block(id) {
            for child in children_of(block) {
                walk(ws, &child, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(ws, root, &mut out);
    out
}

/// Root of `id` found by scanning every block for a parent, one level at a
/// time.
pub fn naive_root(ws: &Workspace, id: &BlockId) -> BlockId {
    let mut current = id.clone();
    loop {
        let parent = ws
            .blocks()
            .values()
            .find(|b| children_of(b).contains(&current))
            .map(|b| b.id.clone());
        match parent {
            Some(p) => current = p,
            None => return current,
        }
    }
}

pub fn naive_shelf_of(ws: &Workspace, root: &BlockId) -> Option<ShelfId> {
    ws.shelves()
        .iter()
        .find(|s| s.members.iter().any(|m| m == root))
        .map(|s| s.id.clone())
}

/// `(block, root, shelf)` of every block satisfying `query`, found by
/// checking each block in isolation.
pub fn exhaustive_search(ws: &Workspace, query: &Query) -> BTreeSet<(BlockId, BlockId, Option<ShelfId>)> {
    let mut parent: BTreeMap<&BlockId, BlockId> = BTreeMap::new();
    let children: Vec<(BlockId, Vec<BlockId>)> = ws.blocks().values().map(|b| (b.id.clone(), children_of(b))).collect();
    for (id, kids) in &children {
        for kid in kids {
            parent.insert(kid, id.clone());
        }
    }
    let mut out = BTreeSet::new();
    for block in ws.blocks().values() {
        let mut root = block.id.clone();
        while let Some(p) = parent.get(&root) {
            root = p.clone();
        }
        let shelf = naive_shelf_of(ws, &root);
        if let Some(needle) = &query.comment_substring {
            let Some(comment) = &block.comment else { continue };
            if !comment.to_lowercase().contains(&needle.to_lowercase()) {
                continue;
            }
        }
        if let Some(t) = &query.block_type {
            if &block.block_type != t {
                continue;
            }
        }
        if let Some((name, value)) = &query.field_value {
            if block.fields.get(name) != Some(value) {
                continue;
            }
        }
        if let Some(s) = &query.shelf {
            if shelf.as_ref() != Some(s) {
                continue;
            }
        }
        out.insert((block.id.clone(), root, shelf));
    }
    out
}

/// Id-free rendering of a stack: types, fields, slots, comments and flags.
/// The root position is left out.
pub fn stack_shape(ws: &Workspace, root: &BlockId) -> String {
    fn render(ws: &Workspace, id: &BlockId, out: &mut String) {
        let Some(b) = ws.block(id) else {
            out.push_str("<missing>");
            return;
        };
        let _ = write!(out, "[{} f={:?} c={:?} col={} dis={}", b.block_type, b.fields, b.comment, b.collapsed, b.disabled);
        for (name, child) in &b.value_inputs {
            let _ = write!(out, " v:{name}=");
            match child {
                Some(c) => render(ws, c, out),
                None => out.push('_'),
            }
        }
        for (name, child) in &b.statement_inputs {
            let _ = write!(out, " s:{name}=");
            match child {
                Some(c) => render(ws, c, out),
                None => out.push('_'),
            }
        }
        if let Some(next) = &b.next {
            out.push_str(" n=");
            render(ws, next, out);
        }
        out.push(']');
    }
    let mut out = String::new();
    render(ws, root, &mut out);
    out
}

/// Checks that `mapping` carries the stack at `a_root` in `a` onto the one
/// at `b_root` in `b`, block for block.
pub fn isomorphic_under(
    a: &Workspace,
    a_root: &BlockId,
    b: &Workspace,
    b_root: &BlockId,
    mapping: &BTreeMap<BlockId, BlockId>,
) -> Result<(), String> {
    if mapping.get(a_root) != Some(b_root) {
        return Err(format!("root {a_root} is not mapped to {b_root}"));
    }
    for id in reachable(a, a_root) {
        let Some(image) = mapping.get(&id) else {
            return Err(format!("block {id} has no image"));
        };
        let (Some(x), Some(y)) = (a.block(&id), b.block(image)) else {
            return Err(format!("block {id} or its image {image} is missing"));
        };
        let same = x.block_type == y.block_type
            && x.fields == y.fields
            && x.comment == y.comment
            && x.collapsed == y.collapsed
            && x.disabled == y.disabled;
        if !same {
            return Err(format!("{id} and {image} differ"));
        }
        let map_slots = |slots: &BTreeMap<String, Option<BlockId>>| -> BTreeMap<String, Option<BlockId>> {
            slots
                .iter()
                .map(|(k, v)| (k.clone(), v.as_ref().and_then(|c| mapping.get(c).cloned())))
                .collect()
        };
        if map_slots(&x.value_inputs) != y.value_inputs
            || map_slots(&x.statement_inputs) != y.statement_inputs
            || x.next.as_ref().and_then(|n| mapping.get(n)) != y.next.as_ref()
        {
            return Err(format!("connections of {id} and {image} differ"));
        }
    }
    if stack_shape(a, a_root) != stack_shape(b, b_root) {
        return Err("stack shapes differ".into());
    }
    Ok(())
}

/// The workspace with the given stacks removed entirely, shelves pruned.
pub fn delete_stacks(ws: &Workspace, roots: &[BlockId]) -> Workspace {
    let doomed: BTreeSet<BlockId> = roots.iter().flat_map(|r| reachable(ws, r)).collect();
    let blocks: Vec<Block> = ws.blocks().values().filter(|b| !doomed.contains(&b.id)).cloned().collect();
    let top: Vec<BlockId> = ws.top_level().iter().filter(|r| !doomed.contains(r)).cloned().collect();
    let shelves = ShelfRegistry::from_shelves(
        ws.shelves()
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.members.retain(|m| !doomed.contains(m));
                s
            })
            .collect(),
    );
    Workspace::from_parts(blocks, top, shelves)
}

/// No root belongs to two shelves, and every member is a top-level block.
pub fn shelves_disjoint(ws: &Workspace) -> bool {
    let mut seen = BTreeSet::new();
    for shelf in ws.shelves().iter() {
        for member in &shelf.members {
            if !seen.insert(member.clone()) || !ws.top_level().contains(member) {
                return false;
            }
        }
    }
    true
}

/// `(kind, name)` pairs used but not defined within `blocks`, from a table
/// of the naming fields of each block type.
pub fn unresolved_names(blocks: &BTreeMap<BlockId, Block>) -> BTreeSet<(String, String)> {
    let mut defined = BTreeSet::new();
    let mut used = BTreeSet::new();
    for b in blocks.values() {
        let field = |name: &str| b.fields.get(name).cloned();
        match b.block_type.as_str() {
            "procedures_defnoreturn" | "procedures_defreturn" => {
                defined.extend(field("NAME").map(|n| ("procedure".to_owned(), n)));
            }
            "global_declaration" => {
                defined.extend(field("NAME").map(|n| ("variable".to_owned(), n)));
            }
            "procedures_callnoreturn" | "procedures_callreturn" => {
                used.extend(field("PROCNAME").map(|n| ("procedure".to_owned(), n)));
            }
            "lexical_variable_get" | "lexical_variable_set" => {
                used.extend(field("VAR").map(|n| ("variable".to_owned(), n)));
            }
            _ => {}
        }
        used.extend(field("COMPONENT").map(|n| ("component".to_owned(), n)));
    }
    used.difference(&defined).cloned().collect()
}

/// Count of `counts` strictly above `threshold`, by plain loop.
pub fn count_over(counts: &[usize], threshold: usize) -> usize {
    let mut n = 0;
    for &c in counts {
        if c > threshold {
            n += 1;
        }
    }
    n
}
