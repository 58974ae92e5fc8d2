//! Canonical compile of a workspace to an s-expression event script.
//!
//! The output depends only on program meaning. Positions, root order,
//! shelf visibility, collapse flags and comments never reach it. Forms are
//! emitted one per enabled event handler or definition, sorted by
//! [`HandlerKey`].

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::model::{Block, BlockId, Slot, Workspace};
use crate::semantics::{BlockSemantics, RuleKind};

/// Sort key of a top-level form. Field order is comparison order; the block
/// id only breaks ties between otherwise identical handlers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct HandlerKey {
    pub block_type: String,
    pub component: String,
    pub name: String,
    pub block: BlockId,
}

impl fmt::Display for HandlerKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}#{}", self.block_type, self.component, self.name, self.block)
    }
}

/// Key of any root block, handler or not. Search orders results by it.
pub fn root_key(block: &Block) -> HandlerKey {
    let name = block
        .field("EVENT")
        .or_else(|| block.field("NAME"))
        .unwrap_or_default();
    HandlerKey {
        block_type: block.block_type.clone(),
        component: block.field("COMPONENT").unwrap_or_default().to_owned(),
        name: name.to_owned(),
        block: block.id.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Form {
    pub key: HandlerKey,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CanonicalProgram {
    pub text: String,
    pub forms: Vec<Form>,
    pub warnings: Vec<Diagnostic>,
}

impl CanonicalProgram {
    pub fn handler_keys(&self) -> Vec<&HandlerKey> {
        self.forms.iter().map(|f| &f.key).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("workspace is not valid ({} problems)", .0.len())]
    InvalidWorkspace(Vec<Diagnostic>),
    #[error("block {block} has unknown type {block_type}")]
    UnknownBlockType { block: BlockId, block_type: String },
}

pub fn generate(ws: &Workspace) -> Result<CanonicalProgram, GenerateError> {
    generate_with(ws, &BlockSemantics::builtin())
}

pub fn generate_with(
    ws: &Workspace,
    semantics: &BlockSemantics,
) -> Result<CanonicalProgram, GenerateError> {
    let errors: Vec<_> = ws.validate().into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(GenerateError::InvalidWorkspace(errors));
    }
    for block in ws.blocks().values() {
        if semantics.rule(&block.block_type).is_none() {
            return Err(GenerateError::UnknownBlockType {
                block: block.id.clone(),
                block_type: block.block_type.clone(),
            });
        }
    }
    let shape = check_shapes(ws, semantics);
    if !shape.is_empty() {
        return Err(GenerateError::InvalidWorkspace(shape));
    }

    let mut emitter = Emitter {
        ws,
        parents: ws.parent_index(),
        warnings: Vec::new(),
    };
    let mut forms = Vec::new();
    for root in ws.top_level() {
        let block = &ws.blocks()[root];
        match semantics.rule(&block.block_type).map(|r| r.kind) {
            Some(RuleKind::EventHandler | RuleKind::Definition) => {
                if block.disabled {
                    continue;
                }
                let mut text = String::new();
                emitter.form(block).render(0, &mut text);
                text.push('\n');
                forms.push(Form { key: root_key(block), text });
            }
            _ => emitter.warnings.push(Diagnostic::warning(
                "floating-stack",
                Some(root),
                format!("top-level {} stack is not a handler and is ignored", block.block_type),
            )),
        }
    }
    forms.sort_by(|a, b| a.key.cmp(&b.key));
    let text = forms.iter().map(|f| f.text.as_str()).collect();
    Ok(CanonicalProgram {
        text,
        forms,
        warnings: emitter.warnings,
    })
}

fn check_shapes(ws: &Workspace, semantics: &BlockSemantics) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let kind_of = |id: &BlockId| {
        ws.block(id)
            .and_then(|b| semantics.rule(&b.block_type))
            .map(|r| r.kind)
    };
    for block in ws.blocks().values() {
        let Some(rule) = semantics.rule(&block.block_type) else {
            continue;
        };
        let id = Some(&block.id);
        for field in rule.fields {
            if !block.fields.contains_key(*field) {
                diags.push(Diagnostic::error(
                    "missing-field",
                    id,
                    format!("{} requires field {field}", block.block_type),
                ));
            }
        }
        for field in block.fields.keys() {
            if !rule.fields.contains(&field.as_str()) {
                diags.push(Diagnostic::error(
                    "unknown-field",
                    id,
                    format!("{} has no field {field}", block.block_type),
                ));
            }
        }
        for (slot, child) in block.children() {
            let (known, wanted) = match &slot {
                Slot::Value(name) => (rule.values.contains(&name.as_str()), RuleKind::Expression),
                Slot::Statement(name) => {
                    (rule.statements.contains(&name.as_str()), RuleKind::Statement)
                }
                Slot::Next => (rule.allows_next(), RuleKind::Statement),
            };
            if !known {
                diags.push(Diagnostic::error(
                    "unknown-slot",
                    id,
                    format!("{} has no slot {slot}", block.block_type),
                ));
            } else if kind_of(child) != Some(wanted) {
                diags.push(Diagnostic::error(
                    "kind-mismatch",
                    Some(child),
                    format!("{slot} of {} expects a {wanted:?} block", block.id),
                ));
            }
        }
        let empty_values = block
            .value_inputs
            .iter()
            .filter(|(k, v)| v.is_none() && !rule.values.contains(&k.as_str()));
        let empty_statements = block
            .statement_inputs
            .iter()
            .filter(|(k, v)| v.is_none() && !rule.statements.contains(&k.as_str()));
        for (name, _) in empty_values.chain(empty_statements) {
            diags.push(Diagnostic::error(
                "unknown-slot",
                id,
                format!("{} has no slot {name}", block.block_type),
            ));
        }
    }
    diags
}

struct Doc {
    head: String,
    body: Vec<Doc>,
}

impl Doc {
    fn leaf(head: String) -> Doc {
        Doc { head, body: Vec::new() }
    }

    fn render(&self, indent: usize, out: &mut String) {
        let Doc { head, body } = self;
        out.extend(std::iter::repeat_n(' ', indent));
        out.push('(');
        out.push_str(head);
        for child in body {
            out.push('\n');
            child.render(indent + 2, out);
        }
        out.push(')');
    }
}

struct Emitter<'a> {
    ws: &'a Workspace,
    parents: HashMap<BlockId, (BlockId, Slot)>,
    warnings: Vec<Diagnostic>,
}

impl Emitter<'_> {
    fn form(&mut self, block: &Block) -> Doc {
        let f = |name: &str| atom(block.field(name).unwrap_or_default());
        match block.block_type.as_str() {
            "component_event" => Doc {
                head: format!("when {}.{}", f("COMPONENT"), f("EVENT")),
                body: self.statements(block, "DO"),
            },
            "procedures_defnoreturn" => Doc {
                head: format!("define {}", f("NAME")),
                body: self.statements(block, "STACK"),
            },
            "procedures_defreturn" => {
                let mut body = self.statements(block, "STACK");
                body.push(Doc::leaf(format!("return {}", self.value(block, "RETURN"))));
                Doc { head: format!("define-fn {}", f("NAME")), body }
            }
            "global_declaration" => {
                Doc::leaf(format!("global {} {}", f("NAME"), self.value(block, "VALUE")))
            }
            other => Doc::leaf(format!("unsupported {}", atom(other))),
        }
    }

    /// Enabled statements of the stack plugged into `input`. Disabled
    /// statements are skipped and their `next` chain continues.
    fn statements(&mut self, block: &Block, input: &str) -> Vec<Doc> {
        let mut out = Vec::new();
        let mut cursor = block.slot(&Slot::Statement(input.to_owned())).cloned();
        while let Some(id) = cursor {
            let current = &self.ws.blocks()[&id];
            if !self.ws.effectively_disabled_with(&id, &self.parents) {
                out.push(self.statement(current));
            }
            cursor = current.next.clone();
        }
        out
    }

    fn statement(&mut self, block: &Block) -> Doc {
        let f = |name: &str| atom(block.field(name).unwrap_or_default());
        match block.block_type.as_str() {
            "component_set" => Doc::leaf(format!(
                "set {}.{} {}",
                f("COMPONENT"),
                f("PROPERTY"),
                self.value(block, "VALUE")
            )),
            "component_method" => {
                let mut head = format!("invoke {}.{}", f("COMPONENT"), f("METHOD"));
                if block.slot(&Slot::Value("ARG".into())).is_some() {
                    head.push(' ');
                    head.push_str(&self.value(block, "ARG"));
                }
                Doc::leaf(head)
            }
            "procedures_callnoreturn" => Doc::leaf(format!("call {}", f("PROCNAME"))),
            "lexical_variable_set" => {
                Doc::leaf(format!("set-var {} {}", f("VAR"), self.value(block, "VALUE")))
            }
            "controls_if" => Doc {
                head: format!("if {}", self.value(block, "IF")),
                body: vec![
                    Doc { head: "then".into(), body: self.statements(block, "DO") },
                    Doc { head: "else".into(), body: self.statements(block, "ELSE") },
                ],
            },
            "controls_repeat" => Doc {
                head: format!("repeat {}", self.value(block, "TIMES")),
                body: self.statements(block, "DO"),
            },
            other => Doc::leaf(format!("unsupported {}", atom(other))),
        }
    }

    fn value(&mut self, block: &Block, input: &str) -> String {
        let Some(id) = block.slot(&Slot::Value(input.to_owned())) else {
            return "(hole)".into();
        };
        if self.ws.effectively_disabled_with(id, &self.parents) {
            self.warnings.push(Diagnostic::warning(
                "disabled-expression",
                Some(id),
                format!("disabled expression in {input} of {} compiles to (hole)", block.id),
            ));
            return "(hole)".into();
        }
        let child = &self.ws.blocks()[id];
        self.expression(child)
    }

    fn expression(&mut self, block: &Block) -> String {
        let f = |name: &str| block.field(name).unwrap_or_default();
        let binary = |this: &mut Self, op: &str| {
            format!("({op} {} {})", this.value(block, "A"), this.value(block, "B"))
        };
        match block.block_type.as_str() {
            "math_number" => atom(f("NUM")),
            "text" => quote(f("TEXT")),
            "logic_boolean" => atom(&f("BOOL").to_lowercase()),
            "math_add" => binary(self, "+"),
            "math_subtract" => binary(self, "-"),
            "math_multiply" => binary(self, "*"),
            "math_divide" => binary(self, "/"),
            "math_compare" => {
                let op = match f("OP") {
                    "EQ" => "=".to_owned(),
                    "NEQ" => "!=".to_owned(),
                    "LT" => "<".to_owned(),
                    "LTE" => "<=".to_owned(),
                    "GT" => ">".to_owned(),
                    "GTE" => ">=".to_owned(),
                    other => atom(&other.to_lowercase()),
                };
                binary(self, &op)
            }
            "logic_operation" => binary(self, &atom(&f("OP").to_lowercase())),
            "logic_negate" => format!("(not {})", self.value(block, "BOOL")),
            "lexical_variable_get" => format!("(get {})", atom(f("VAR"))),
            "component_get" => {
                format!("(get {}.{})", atom(f("COMPONENT")), atom(f("PROPERTY")))
            }
            "procedures_callreturn" => format!("(call {})", atom(f("PROCNAME"))),
            other => format!("(unsupported {})", atom(other)),
        }
    }
}

/// Bare symbol when unambiguous, otherwise a quoted string.
fn atom(text: &str) -> String {
    let plain = !text.is_empty()
        && text
            .chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '(' | ')' | '"' | '\\' | '.' | ';'))
            || text.parse::<f64>().is_ok() && !text.chars().any(char::is_whitespace);
    if plain {
        text.to_owned()
    } else {
        quote(text)
    }
}

fn quote(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for c in text.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// One handler-level difference between two programs, read from `a` to `b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "change", rename_all = "lowercase")]
pub enum HandlerDiff {
    Added { key: HandlerKey, text: String },
    Removed { key: HandlerKey, text: String },
    Changed { key: HandlerKey, before: String, after: String },
}

impl HandlerDiff {
    pub fn key(&self) -> &HandlerKey {
        match self {
            HandlerDiff::Added { key, .. }
            | HandlerDiff::Removed { key, .. }
            | HandlerDiff::Changed { key, .. } => key,
        }
    }
}

/// Empty exactly when the two program texts are equal.
pub fn semantics_diff(a: &CanonicalProgram, b: &CanonicalProgram) -> Vec<HandlerDiff> {
    if a.text == b.text {
        return Vec::new();
    }
    let before: BTreeMap<&HandlerKey, &str> =
        a.forms.iter().map(|f| (&f.key, f.text.as_str())).collect();
    let after: BTreeMap<&HandlerKey, &str> =
        b.forms.iter().map(|f| (&f.key, f.text.as_str())).collect();
    let mut keys: Vec<&HandlerKey> = before.keys().chain(after.keys()).copied().collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .filter_map(|key| match (before.get(key), after.get(key)) {
            (Some(x), Some(y)) if x == y => None,
            (Some(x), Some(y)) => Some(HandlerDiff::Changed {
                key: key.clone(),
                before: (*x).to_owned(),
                after: (*y).to_owned(),
            }),
            (Some(x), None) => Some(HandlerDiff::Removed { key: key.clone(), text: (*x).to_owned() }),
            (None, Some(y)) => Some(HandlerDiff::Added { key: key.clone(), text: (*y).to_owned() }),
            (None, None) => None,
        })
        .collect()
}
