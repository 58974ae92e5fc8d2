use std::collections::BTreeSet;

use blockshelf_core::{generate, serialize_workspace, Block, BlockId, EditError, Position, ShelfRegistry, Slot, Workspace};
use blockshelf_testkit::oracle::{isomorphic_under, reachable};
use blockshelf_testkit::{random_workspace, rng, tutorial, GenConfig};

fn num(ws: &mut Workspace, n: &str) -> BlockId {
    ws.add_block("math_number", [("NUM", n)], Position::new(0, 0)).unwrap()
}

fn all_reachable(ws: &Workspace) -> BTreeSet<BlockId> {
    ws.top_level().iter().flat_map(|r| reachable(ws, r)).collect()
}

#[test]
fn new_workspace_is_empty() {
    let ws = Workspace::new();
    assert_eq!(ws.block_count(), 0);
    assert!(ws.shelves().is_empty());
    assert_eq!(ws.revision(), 0);
    assert_eq!(serialize_workspace(&ws).unwrap(), b"<xml></xml>\n");
    assert!(ws.validate().is_empty());
}

#[test]
fn add_block_reads_back_fields() {
    let mut ws = Workspace::new();
    let id = num(&mut ws, "17");
    assert_eq!(ws.block(&id).unwrap().field("NUM"), Some("17"));
    assert_eq!(ws.top_level(), &[id]);
    assert_eq!(ws.revision(), 1);
    assert_eq!(ws.add_block("", Vec::<(String, String)>::new(), Position::default()), Err(EditError::EmptyBlockType));
}

#[test]
fn sequential_adds_count_to_tutorial_scale() {
    let mut ws = Workspace::new();
    for i in 0..197 {
        num(&mut ws, &i.to_string());
    }
    assert_eq!(ws.block_count(), 197);
    assert_eq!(tutorial().block_count(), 197);
}

#[test]
fn connect_moves_child_out_of_top_level() {
    let mut ws = Workspace::new();
    let add = ws.add_block("math_add", Vec::<(&str, &str)>::new(), Position::new(5, 5)).unwrap();
    let n = num(&mut ws, "1");
    ws.connect(&add, Slot::Value("A".into()), &n).unwrap();
    assert_eq!(ws.top_level(), std::slice::from_ref(&add));
    assert_eq!(ws.block(&n).unwrap().position, None);
    let m = num(&mut ws, "2");
    assert_eq!(
        ws.connect(&add, Slot::Value("A".into()), &m),
        Err(EditError::SlotOccupied { parent: add.clone(), slot: Slot::Value("A".into()) })
    );
    assert_eq!(ws.connect(&n, Slot::Value("A".into()), &add), Err(EditError::WouldCreateCycle { parent: n.clone(), child: add.clone() }));
    assert_eq!(ws.connect(&m, Slot::Value("A".into()), &n), Err(EditError::ChildNotTopLevel(n.clone())));
    assert_eq!(ws.connect(&add, Slot::Next, &BlockId::new("zz")), Err(EditError::UnknownBlock(BlockId::new("zz"))));
}

#[test]
fn chain_leaves_only_head_on_top_level() {
    let mut ws = Workspace::new();
    let ids: Vec<BlockId> = ["a", "b", "c"]
        .iter()
        .map(|p| ws.add_block("procedures_callnoreturn", [("PROCNAME", *p)], Position::default()).unwrap())
        .collect();
    ws.connect(&ids[0], Slot::Next, &ids[1]).unwrap();
    ws.connect(&ids[1], Slot::Next, &ids[2]).unwrap();
    assert_eq!(ws.top_level(), &ids[..1]);
    assert_eq!(reachable(&ws, &ids[0]), ids.iter().cloned().collect());
    assert_eq!(ws.subtree(&ids[0]).unwrap(), ids);
}

#[test]
fn disconnect_and_reconnect_is_identity() {
    let mut ws = Workspace::new();
    let head = ws.add_block("component_event", [("COMPONENT", "B"), ("EVENT", "Click")], Position::new(3, 4)).unwrap();
    let a = ws.add_block("procedures_callnoreturn", [("PROCNAME", "a")], Position::default()).unwrap();
    let b = ws.add_block("procedures_callnoreturn", [("PROCNAME", "b")], Position::default()).unwrap();
    ws.connect(&head, Slot::Statement("DO".into()), &a).unwrap();
    ws.connect(&a, Slot::Next, &b).unwrap();
    let before = ws.clone();

    ws.disconnect(&a, Position::new(100, 100)).unwrap();
    assert!(ws.is_top_level(&a));
    assert_eq!(reachable(&ws, &a), [a.clone(), b.clone()].into_iter().collect());
    assert_eq!(ws.block(&a).unwrap().position, Some(Position::new(100, 100)));
    assert_eq!(ws.disconnect(&a, Position::default()), Err(EditError::AlreadyTopLevel(a.clone())));

    ws.connect(&head, Slot::Statement("DO".into()), &a).unwrap();
    assert!(ws.structurally_eq(&before));
    assert_ne!(ws.revision(), before.revision());
}

#[test]
fn flags_and_comments() {
    let mut ws = Workspace::new();
    let h = ws.add_block("component_event", [("COMPONENT", "B"), ("EVENT", "Click")], Position::new(0, 0)).unwrap();
    let c = ws.add_block("procedures_callnoreturn", [("PROCNAME", "p")], Position::default()).unwrap();
    ws.connect(&h, Slot::Statement("DO".into()), &c).unwrap();
    ws.set_comment(&c, Some("score handler".into())).unwrap();
    assert_eq!(ws.block(&c).unwrap().comment.as_deref(), Some("score handler"));
    let found = blockshelf_core::search(&ws, &blockshelf_core::Query::comment("score")).unwrap();
    assert_eq!(found[0].block, c);

    let rev = ws.revision();
    ws.set_collapsed(&h, true).unwrap();
    ws.set_collapsed(&h, true).unwrap();
    assert!(ws.block(&h).unwrap().collapsed);
    assert_eq!(ws.revision(), rev + 2);
    assert_eq!(ws.set_collapsed(&c, true), Err(EditError::CollapseOnNestedBlock(c.clone())));

    let with = generate(&ws).unwrap();
    ws.set_disabled(&h, true).unwrap();
    let without = generate(&ws).unwrap();
    assert_eq!(with.forms.len(), 1);
    assert!(without.forms.is_empty());
    assert!(ws.effectively_disabled(&c));
}

#[test]
fn duplicate_subtree_is_fresh_and_isomorphic() {
    let mut ws = Workspace::new();
    let h = ws.add_block("component_event", [("COMPONENT", "B"), ("EVENT", "Click")], Position::new(10, 10)).unwrap();
    let set = ws.add_block("component_set", [("COMPONENT", "L"), ("PROPERTY", "Text")], Position::default()).unwrap();
    let add = ws.add_block("math_add", Vec::<(&str, &str)>::new(), Position::default()).unwrap();
    let one = num(&mut ws, "1");
    let two = num(&mut ws, "2");
    ws.connect(&add, Slot::Value("A".into()), &one).unwrap();
    ws.connect(&add, Slot::Value("B".into()), &two).unwrap();
    ws.connect(&set, Slot::Value("VALUE".into()), &add).unwrap();
    ws.connect(&h, Slot::Statement("DO".into()), &set).unwrap();
    let before: BTreeSet<BlockId> = ws.blocks().keys().cloned().collect();

    let mapping = ws.duplicate_subtree(&h, Position::new(40, 40)).unwrap();
    assert_eq!(ws.block_count(), 10);
    let range: BTreeSet<BlockId> = mapping.values().cloned().collect();
    assert_eq!(range.len(), mapping.len());
    assert!(range.is_disjoint(&before));
    assert_eq!(mapping.keys().cloned().collect::<BTreeSet<_>>(), before);
    let copy = &mapping[&h];
    isomorphic_under(&ws, &h, &ws, copy, &mapping).unwrap();
    assert_eq!(ws.block(copy).unwrap().position, Some(Position::new(50, 50)));
    assert_eq!(ws.duplicate_subtree(&set, Position::default()), Err(EditError::NotTopLevel(set)));
}

#[test]
fn validate_reports_dangling_next() {
    let mut a = Block::new("a".into(), "procedures_callnoreturn");
    a.position = Some(Position::new(0, 0));
    a.next = Some("ghost".into());
    let ws = Workspace::from_parts([a], vec!["a".into()], ShelfRegistry::default());
    let diags = ws.validate();
    assert_eq!(diags.len(), 1);
    assert_eq!(diags[0].code, "dangling-ref");
    assert!(diags[0].is_error());
}

#[test]
fn counts_agree_with_traversal() {
    for case in 0..50 {
        let ws = random_workspace(&mut rng(1, case), &GenConfig::default());
        assert_eq!(ws.block_count(), all_reachable(&ws).len());
        let before = ws.clone();
        let _ = ws.validate();
        assert!(ws.structurally_eq(&before) && ws.revision() == before.revision());
        for root in ws.top_level() {
            assert_eq!(ws.block_count_in(root).unwrap(), reachable(&ws, root).len());
        }
    }
    assert!(Workspace::new().block_count_in(&"x".into()).is_err());
}

#[test]
fn fresh_ids_skip_existing() {
    let mut b = Block::new("b3".into(), "math_number");
    b.fields.insert("NUM".into(), "1".into());
    b.position = Some(Position::new(0, 0));
    let mut ws = Workspace::from_parts([b], vec!["b3".into()], ShelfRegistry::default());
    let id = num(&mut ws, "2");
    assert_eq!(id.as_str(), "b4");
}
