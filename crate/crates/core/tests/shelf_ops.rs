use std::collections::{BTreeMap, BTreeSet};

use blockshelf_core::shelf::DEFAULT_DUPLICATE_OFFSET;
use blockshelf_core::{
    generate, semantics_diff, serialize_workspace, Coverage, EditError, HandlerDiff, NamePolicy, Position, RefKind,
    ShelfId, Slot, UnresolvedRef, Workspace,
};
use blockshelf_testkit::oracle::{delete_stacks, isomorphic_under, reachable, shelves_disjoint, unresolved_names};
use blockshelf_testkit::{builtin_fixtures, pusheen, pusheen_unshelved, Builder};

fn shelf(ws: &Workspace, name: &str) -> ShelfId {
    ws.shelves().by_name(name).next().unwrap_or_else(|| panic!("no shelf {name}")).id.clone()
}

#[test]
fn create_buttons_shelf_on_pusheen() {
    let (mut ws, groups) = pusheen_unshelved();
    let buttons = groups.iter().find(|(n, _)| *n == "Buttons").unwrap().1.clone();
    assert_eq!(buttons.len(), 8);
    let id = ws.create_shelf("Buttons", &buttons).unwrap();
    let rows = ws.shelf_box();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].shelf.clone(), rows[0].name.as_str(), rows[0].member_roots), (id.clone(), "Buttons", 8));
    assert!(rows[0].visible);
    assert_eq!(
        ws.create_shelf("Again", &buttons[..1]),
        Err(EditError::AlreadyShelved { block: buttons[0].clone(), shelf: id })
    );
}

#[test]
fn create_shelf_errors_and_empty_shelf() {
    let mut ws = Workspace::new();
    let h = ws.add_block("component_event", [("COMPONENT", "B"), ("EVENT", "Click")], Position::new(0, 0)).unwrap();
    let c = ws.add_block("procedures_callnoreturn", [("PROCNAME", "p")], Position::default()).unwrap();
    ws.connect(&h, Slot::Statement("DO".into()), &c).unwrap();
    let empty = ws.create_shelf("Empty", &[]).unwrap();
    let row = &ws.shelf_box()[0];
    assert_eq!((row.member_roots, row.total_blocks), (0, 0));
    assert_eq!((row.collapse_state, row.active_state), (Coverage::None, Coverage::None));
    assert_eq!(ws.create_shelf("", std::slice::from_ref(&h)), Err(EditError::EmptyName));
    assert_eq!(ws.create_shelf("X", std::slice::from_ref(&c)), Err(EditError::NotTopLevel(c.clone())));
    assert_eq!(ws.create_shelf("X", &["nope".into()]), Err(EditError::UnknownBlock("nope".into())));
    assert_eq!(ws.set_shelf_visibility(&"s99".into(), false), Err(EditError::UnknownShelf("s99".into())));
    let dup = ws.duplicate_shelf(&empty, DEFAULT_DUPLICATE_OFFSET).unwrap();
    let copy = ws.shelves().get(&dup).unwrap();
    assert_eq!(copy.name, "Copy of Empty");
    assert!(copy.members.is_empty());
}

#[test]
fn assign_and_remove_are_inverse() {
    let mut ws = pusheen();
    let timer = shelf(&ws, "Timer");
    let alerts = shelf(&ws, "Alerts");
    let before = serialize_workspace(&ws).unwrap();
    let clock = ws.shelves().get(&timer).unwrap().members[1].clone();

    ws.remove_from_shelf(&timer, std::slice::from_ref(&clock)).unwrap();
    assert_eq!(ws.shelf_of(&clock), None);
    ws.assign_to_shelf(&alerts, std::slice::from_ref(&clock)).unwrap();
    assert!(shelves_disjoint(&ws));
    assert_eq!(ws.shelf_of(&clock), Some(&alerts));
    assert_eq!(
        ws.remove_from_shelf(&timer, std::slice::from_ref(&clock)),
        Err(EditError::NotAMember { block: clock.clone(), shelf: timer.clone() })
    );
    ws.remove_from_shelf(&alerts, std::slice::from_ref(&clock)).unwrap();
    ws.assign_to_shelf(&timer, std::slice::from_ref(&clock)).unwrap();
    assert_eq!(serialize_workspace(&ws).unwrap(), before);
}

#[test]
fn visibility_hides_roots_but_not_semantics() {
    let mut ws = pusheen();
    let buttons = shelf(&ws, "Buttons");
    let members: BTreeSet<_> = ws.shelves().get(&buttons).unwrap().members.iter().cloned().collect();
    let program = generate(&ws).unwrap();
    let status = ws.shelf_box();

    ws.set_shelf_visibility(&buttons, false).unwrap();
    let visible: BTreeSet<_> = ws.visible_roots().into_iter().collect();
    assert_eq!(visible.len(), ws.top_level().len() - 8);
    assert!(visible.is_disjoint(&members));
    assert_eq!(generate(&ws).unwrap(), program);

    ws.set_shelf_visibility(&buttons, true).unwrap();
    assert_eq!(ws.shelf_box(), status);
}

#[test]
fn visible_roots_edge_cases() {
    let mut b = Builder::new();
    let one = b.num(1);
    let g = b.global("x", one);
    let two = b.num(2);
    let h = b.global("y", two);
    let mut ws = b.finish();
    assert_eq!(ws.visible_roots(), ws.top_level());
    let s1 = ws.create_shelf("A", &[g]).unwrap();
    let s2 = ws.create_shelf("B", std::slice::from_ref(&h)).unwrap();
    ws.set_shelf_visibility(&s1, false).unwrap();
    assert_eq!(ws.visible_roots(), vec![h]);
    ws.set_shelf_visibility(&s2, false).unwrap();
    assert!(ws.visible_roots().is_empty());
}

#[test]
fn hiding_all_but_target_leaves_exactly_its_members() {
    let base = pusheen();
    for target in base.shelves().iter() {
        let mut ws = base.clone();
        for other in base.shelves().iter().filter(|s| s.id != target.id) {
            ws.set_shelf_visibility(&other.id, false).unwrap();
        }
        let visible: BTreeSet<_> = ws.visible_roots().into_iter().collect();
        let members: BTreeSet<_> = target.members.iter().cloned().collect();
        assert_eq!(visible, members, "shelf {}", target.name);
    }
}

#[test]
fn minimize_and_maximize() {
    let mut ws = pusheen();
    let buttons = shelf(&ws, "Buttons");
    let visible = ws.visible_roots();
    ws.minimize_shelf(&buttons).unwrap();
    let row = ws.shelf_box().into_iter().find(|r| r.shelf == buttons).unwrap();
    assert_eq!(row.collapse_state, Coverage::All);
    assert_eq!(ws.visible_roots(), visible);
    let first = ws.shelves().get(&buttons).unwrap().members[0].clone();
    ws.set_collapsed(&first, false).unwrap();
    let row = ws.shelf_box().into_iter().find(|r| r.shelf == buttons).unwrap();
    assert_eq!(row.collapse_state, Coverage::Some);
    ws.maximize_shelf(&buttons).unwrap();
    let row = ws.shelf_box().into_iter().find(|r| r.shelf == buttons).unwrap();
    assert_eq!(row.collapse_state, Coverage::None);
}

#[test]
fn deactivate_removes_handlers_and_activate_restores() {
    let mut ws = pusheen();
    let buttons = shelf(&ws, "Buttons");
    let original = generate(&ws).unwrap();
    let members: BTreeSet<_> = ws.shelves().get(&buttons).unwrap().members.iter().cloned().collect();
    ws.deactivate_shelf(&buttons).unwrap();
    let off = generate(&ws).unwrap();
    assert!(off.forms.iter().all(|f| !members.contains(&f.key.block)));
    assert_eq!(ws.shelf_box().into_iter().find(|r| r.shelf == buttons).unwrap().active_state, Coverage::None);

    let removed: Vec<_> = semantics_diff(&original, &off)
        .into_iter()
        .map(|d| match d {
            HandlerDiff::Removed { key, .. } => key.block,
            other => panic!("unexpected {other:?}"),
        })
        .collect();
    assert_eq!(removed.into_iter().collect::<BTreeSet<_>>(), members);

    ws.activate_shelf(&buttons).unwrap();
    assert_eq!(generate(&ws).unwrap(), original);
}

#[test]
fn deactivation_equals_deletion_on_fixtures() {
    for (name, ws) in builtin_fixtures() {
        for s in ws.shelves().iter() {
            let mut off = ws.clone();
            off.deactivate_shelf(&s.id).unwrap();
            let deleted = delete_stacks(&ws, &s.members);
            assert_eq!(generate(&off).unwrap().text, generate(&deleted).unwrap().text, "{name} shelf {}", s.name);
        }
    }
}

#[test]
fn duplicate_shelf_copies_every_stack() {
    let mut ws = pusheen();
    let timer = shelf(&ws, "Timer");
    let original = ws.shelves().get(&timer).unwrap().clone();
    let total: usize = original.members.iter().map(|m| ws.block_count_in(m).unwrap()).sum();
    let before_count = ws.block_count();
    let before_ids: BTreeSet<_> = ws.blocks().keys().cloned().collect();
    let before_blocks = ws.blocks().clone();
    let program = generate(&ws).unwrap();
    let rev = ws.revision();

    let copy = ws.duplicate_shelf(&timer, DEFAULT_DUPLICATE_OFFSET).unwrap();
    assert_eq!(ws.revision(), rev + 1);
    assert_eq!(ws.block_count(), before_count + total);
    let dup = ws.shelves().get(&copy).unwrap().clone();
    assert_eq!(dup.name, "Copy of Timer");
    assert_eq!(dup.members.len(), original.members.len());
    assert_eq!(ws.shelves().get(&timer).unwrap(), &original);
    for (id, block) in &before_blocks {
        assert_eq!(ws.block(id), Some(block));
    }
    for (a, b) in original.members.iter().zip(&dup.members) {
        let a_ids: Vec<_> = ws.subtree(a).unwrap();
        let b_ids: Vec<_> = ws.subtree(b).unwrap();
        let mapping: BTreeMap<_, _> = a_ids.iter().cloned().zip(b_ids.iter().cloned()).collect();
        isomorphic_under(&ws, a, &ws, b, &mapping).unwrap();
        assert!(reachable(&ws, b).is_disjoint(&before_ids));
        let pa = ws.block(a).unwrap().position.unwrap();
        assert_eq!(ws.block(b).unwrap().position, Some(pa.offset(DEFAULT_DUPLICATE_OFFSET)));
    }

    let after = generate(&ws).unwrap();
    let diffs = semantics_diff(&program, &after);
    assert_eq!(diffs.len(), original.members.len());
    for d in diffs {
        let HandlerDiff::Added { key, text } = d else { panic!("expected only additions") };
        let twin = program.forms.iter().find(|f| {
            (&f.key.block_type, &f.key.component, &f.key.name) == (&key.block_type, &key.component, &key.name)
        });
        assert_eq!(twin.map(|f| &f.text), Some(&text));
    }
}

#[test]
fn export_reports_unresolved_names() {
    let ws = pusheen();
    let restart = shelf(&ws, "Restart");
    let rev = ws.revision();
    let doc = ws.export_shelf(&restart).unwrap();
    assert_eq!(ws.revision(), rev);
    assert!(doc.unresolved_refs.contains(&UnresolvedRef { kind: RefKind::Procedure, name: "reset_timer".into() }));
    let oracle: BTreeSet<(String, String)> = unresolved_names(&doc.blocks);
    let found: BTreeSet<(String, String)> =
        doc.unresolved_refs.iter().map(|r| (r.kind.to_string(), r.name.clone())).collect();
    assert_eq!(found, oracle);

    let mut ws = Workspace::new();
    let empty = ws.create_shelf("Nothing", &[]).unwrap();
    let doc = ws.export_shelf(&empty).unwrap();
    assert!(doc.blocks.is_empty() && doc.unresolved_refs.is_empty());
}

#[test]
fn export_import_into_empty_is_isomorphic() {
    for (name, ws) in builtin_fixtures() {
        for s in ws.shelves().iter() {
            let doc = ws.export_shelf(&s.id).unwrap();
            let mut target = Workspace::new();
            let (id, report) = target.import_shelf(&doc, NamePolicy::Suffix).unwrap();
            assert!(report.renames.is_empty());
            let imported = target.shelves().get(&id).unwrap();
            assert_eq!(imported.name, s.name);
            assert_eq!(imported.members.len(), s.members.len());
            for (a, b) in s.members.iter().zip(&imported.members) {
                isomorphic_under(&ws, a, &target, b, &report.id_remap).unwrap_or_else(|e| panic!("{name}: {e}"));
                assert_eq!(ws.block(a).unwrap().position, target.block(b).unwrap().position);
            }
            let again = target.export_shelf(&id).unwrap();
            assert_eq!(again.unresolved_refs, doc.unresolved_refs, "{name}");
            assert!(target.validate().is_empty());
        }
    }
}

#[test]
fn import_into_source_doubles_without_collisions() {
    let mut ws = pusheen();
    let timer = shelf(&ws, "Timer");
    let doc = ws.export_shelf(&timer).unwrap();
    let before: BTreeSet<_> = ws.blocks().keys().cloned().collect();
    let count = ws.block_count();
    let (id, report) = ws.import_shelf(&doc, NamePolicy::Suffix).unwrap();
    assert_eq!(ws.block_count(), count + doc.blocks.len());
    let fresh: BTreeSet<_> = report.id_remap.values().cloned().collect();
    assert!(fresh.is_disjoint(&before));
    assert_eq!(fresh.len(), doc.blocks.len());
    assert_eq!(report.shelf_name, "Timer (imported)");
    assert_eq!(report.renames, vec![("reset_timer".to_owned(), "reset_timer2".to_owned())]);
    let def = &ws.shelves().get(&id).unwrap().members[0];
    assert_eq!(ws.block(def).unwrap().field("NAME"), Some("reset_timer2"));
    assert!(shelves_disjoint(&ws));

    let mut keep = pusheen();
    let (_, report) = keep.import_shelf(&doc, NamePolicy::Keep).unwrap();
    assert!(report.renames.is_empty());
    assert!(report.warnings.iter().any(|w| w.code == "procedure-collision"));
}

#[test]
fn unresolved_procedure_is_a_warning() {
    let mut b = Builder::new();
    let call = b.call("reset_timer");
    let h = b.procedure("restart_round", vec![call]);
    let mut src = b.finish();
    let s = src.create_shelf("Restart", &[h]).unwrap();
    let doc = src.export_shelf(&s).unwrap();
    let mut target = Workspace::new();
    let (_, report) = target.import_shelf(&doc, NamePolicy::Suffix).unwrap();
    let unresolved: Vec<_> = report.warnings.iter().filter(|w| w.code == "unresolved-ref").collect();
    assert_eq!(unresolved.len(), 1);
    assert!(unresolved[0].message.contains("reset_timer"));
}

#[test]
fn import_rejects_bad_documents() {
    let ws = pusheen();
    let mut doc = ws.export_shelf(&shelf(&ws, "Timer")).unwrap();
    doc.format_version = 2;
    assert_eq!(Workspace::new().import_shelf(&doc, NamePolicy::Suffix), Err(EditError::UnsupportedVersion(2)));
    doc.format_version = 1;
    let root = doc.roots[0].clone();
    doc.blocks.get_mut(&root).unwrap().next = Some("ghost".into());
    let err = Workspace::new().import_shelf(&doc, NamePolicy::Suffix).unwrap_err();
    assert_eq!(err.code(), "malformed-document");
}

#[test]
fn shelf_box_totals_match_member_counts() {
    let ws = pusheen();
    let rows = ws.shelf_box();
    let names: Vec<_> = rows.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, blockshelf_testkit::fixtures::PUSHEEN_SHELVES);
    for row in rows {
        let members = &ws.shelves().get(&row.shelf).unwrap().members;
        let sum: usize = members.iter().map(|m| reachable(&ws, m).len()).sum();
        assert_eq!(row.total_blocks, sum);
        assert!(row.member_roots <= row.total_blocks);
    }
    assert!(Workspace::new().shelf_box().is_empty());
}

#[test]
fn shelved_roots_cannot_be_nested() {
    let mut ws = pusheen();
    let timer = shelf(&ws, "Timer");
    let members = ws.shelves().get(&timer).unwrap().members.clone();
    let call = ws.add_block("procedures_callnoreturn", [("PROCNAME", "x")], Position::default()).unwrap();
    assert_eq!(ws.connect(&call, Slot::Next, &members[0]), Err(EditError::ChildShelved(members[0].clone())));
}
