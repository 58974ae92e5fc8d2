//! Built-in block vocabulary: what each block type is and which fields and
//! slots it may carry.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::Block;
use crate::shelf::RefKind;

/// How a block type takes part in the compiled program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// Top-level form run when a component event fires.
    EventHandler,
    /// Top-level named definition (procedures and global variables).
    Definition,
    /// Sits in a statement input or a `next` chain.
    Statement,
    /// Plugs into a value input.
    Expression,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NameRef {
    pub field: &'static str,
    pub kind: RefKind,
    pub defines: bool,
}

/// Emitter rule plus slot signature for one block type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub kind: RuleKind,
    pub fields: &'static [&'static str],
    pub values: &'static [&'static str],
    pub statements: &'static [&'static str],
    pub names: &'static [NameRef],
}

impl Rule {
    pub fn allows_next(&self) -> bool {
        self.kind == RuleKind::Statement
    }
}

const fn uses(field: &'static str, kind: RefKind) -> NameRef {
    NameRef { field, kind, defines: false }
}

const fn defines(field: &'static str, kind: RefKind) -> NameRef {
    NameRef { field, kind, defines: true }
}

const COMPONENT: &[NameRef] = &[uses("COMPONENT", RefKind::Component)];
const NONE: &[NameRef] = &[];

const fn rule(
    kind: RuleKind,
    fields: &'static [&'static str],
    values: &'static [&'static str],
    statements: &'static [&'static str],
    names: &'static [NameRef],
) -> Rule {
    Rule { kind, fields, values, statements, names }
}

use RuleKind::{Definition, EventHandler, Expression, Statement};

const BUILTIN: &[(&str, Rule)] = &[
    ("component_event", rule(EventHandler, &["COMPONENT", "EVENT"], &[], &["DO"], COMPONENT)),
    (
        "procedures_defnoreturn",
        rule(Definition, &["NAME"], &[], &["STACK"], &[defines("NAME", RefKind::Procedure)]),
    ),
    (
        "procedures_defreturn",
        rule(Definition, &["NAME"], &["RETURN"], &["STACK"], &[defines("NAME", RefKind::Procedure)]),
    ),
    (
        "global_declaration",
        rule(Definition, &["NAME"], &["VALUE"], &[], &[defines("NAME", RefKind::Variable)]),
    ),
    ("component_set", rule(Statement, &["COMPONENT", "PROPERTY"], &["VALUE"], &[], COMPONENT)),
    ("component_method", rule(Statement, &["COMPONENT", "METHOD"], &["ARG"], &[], COMPONENT)),
    (
        "procedures_callnoreturn",
        rule(Statement, &["PROCNAME"], &[], &[], &[uses("PROCNAME", RefKind::Procedure)]),
    ),
    (
        "lexical_variable_set",
        rule(Statement, &["VAR"], &["VALUE"], &[], &[uses("VAR", RefKind::Variable)]),
    ),
    ("controls_if", rule(Statement, &[], &["IF"], &["DO", "ELSE"], NONE)),
    ("controls_repeat", rule(Statement, &[], &["TIMES"], &["DO"], NONE)),
    ("math_number", rule(Expression, &["NUM"], &[], &[], NONE)),
    ("math_add", rule(Expression, &[], &["A", "B"], &[], NONE)),
    ("math_subtract", rule(Expression, &[], &["A", "B"], &[], NONE)),
    ("math_multiply", rule(Expression, &[], &["A", "B"], &[], NONE)),
    ("math_divide", rule(Expression, &[], &["A", "B"], &[], NONE)),
    ("math_compare", rule(Expression, &["OP"], &["A", "B"], &[], NONE)),
    ("logic_boolean", rule(Expression, &["BOOL"], &[], &[], NONE)),
    ("logic_operation", rule(Expression, &["OP"], &["A", "B"], &[], NONE)),
    ("logic_negate", rule(Expression, &[], &["BOOL"], &[], NONE)),
    ("text", rule(Expression, &["TEXT"], &[], &[], NONE)),
    (
        "lexical_variable_get",
        rule(Expression, &["VAR"], &[], &[], &[uses("VAR", RefKind::Variable)]),
    ),
    ("component_get", rule(Expression, &["COMPONENT", "PROPERTY"], &[], &[], COMPONENT)),
    (
        "procedures_callreturn",
        rule(Expression, &["PROCNAME"], &[], &[], &[uses("PROCNAME", RefKind::Procedure)]),
    ),
];

/// Mapping from block type to its emitter rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSemantics {
    rules: BTreeMap<String, Rule>,
}

impl BlockSemantics {
    pub fn builtin() -> Self {
        Self {
            rules: BUILTIN
                .iter()
                .map(|(name, rule)| ((*name).to_owned(), rule.clone()))
                .collect(),
        }
    }

    pub fn rule(&self, block_type: &str) -> Option<&Rule> {
        self.rules.get(block_type)
    }

    pub fn block_types(&self) -> impl Iterator<Item = &str> {
        self.rules.keys().map(String::as_str)
    }

    /// Adds or replaces the rule for `block_type`.
    pub fn insert(&mut self, block_type: impl Into<String>, rule: Rule) {
        self.rules.insert(block_type.into(), rule);
    }

    /// Procedure, variable and component names a block defines or uses.
    pub fn names<'b>(&self, block: &'b Block) -> Vec<(RefKind, &'b str, bool)> {
        let Some(rule) = self.rule(&block.block_type) else {
            return Vec::new();
        };
        rule.names
            .iter()
            .filter_map(|r| block.field(r.field).map(|value| (r.kind, value, r.defines)))
            .collect()
    }
}

impl Default for BlockSemantics {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_covers_every_kind() {
        let sem = BlockSemantics::builtin();
        assert_eq!(sem.block_types().count(), BUILTIN.len());
        for kind in [EventHandler, Definition, Statement, Expression] {
            assert!(sem.block_types().any(|t| sem.rule(t).unwrap().kind == kind));
        }
        assert!(sem.rule("procedures_callnoreturn").unwrap().allows_next());
        assert!(!sem.rule("math_number").unwrap().allows_next());
    }

    #[test]
    fn names_reports_definitions_and_uses() {
        let sem = BlockSemantics::builtin();
        let mut def = Block::new("d".into(), "procedures_defnoreturn");
        def.fields.insert("NAME".into(), "reset_timer".into());
        assert_eq!(sem.names(&def), vec![(RefKind::Procedure, "reset_timer", true)]);
        let mut set = Block::new("s".into(), "component_set");
        set.fields.insert("COMPONENT".into(), "Label1".into());
        set.fields.insert("PROPERTY".into(), "Text".into());
        assert_eq!(sem.names(&set), vec![(RefKind::Component, "Label1", false)]);
    }
}
