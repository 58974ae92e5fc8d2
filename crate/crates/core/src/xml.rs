//! Workspace (`.bshelf.xml`) and shelf export (`.shelfexport.xml`) files.
//!
//! Parsing is strict: unknown elements or attributes are rejected with code
//! `unknown-node` unless [`ParseOptions::lenient`] is set, in which case
//! they are dropped and reported as warnings. Serialization is canonical:
//!
//! - two-space indentation, LF line endings, trailing LF;
//! - block attributes in the order `type id x y collapsed disabled`, with
//!   boolean attributes written only when true;
//! - block children ordered fields, values, statements, comment, next;
//! - empty elements written as `<tag></tag>`;
//! - the `shelves` section last, omitted when there are no shelves.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::{self, Write as _};

use roxmltree::{Document, Node, ParsingOptions};
use serde::Serialize;
use thiserror::Error;

use crate::diag::Diagnostic;
use crate::model::{Block, BlockId, Position, Workspace};
use crate::shelf::{RefKind, Shelf, ShelfExport, ShelfId, ShelfRegistry, UnresolvedRef, EXPORT_FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{line}:{column}: {code}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub code: &'static str,
    pub message: String,
}

/// Non-fatal finding from a lenient parse; same shape as [`ParseError`].
pub type ParseWarning = ParseError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Drop unknown elements and attributes with a warning instead of
    /// failing.
    pub lenient: bool,
}

#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<ParseWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("cannot serialize an invalid workspace ({} problems)", .0.len())]
    InvalidWorkspace(Vec<Diagnostic>),
}

pub fn parse_workspace(input: &[u8]) -> Result<Workspace, ParseError> {
    parse_workspace_with(input, ParseOptions::default()).map(|p| p.value)
}

pub fn parse_workspace_with(input: &[u8], options: ParseOptions) -> Result<Parsed<Workspace>, ParseError> {
    let text = decode(input)?;
    let doc = load(text)?;
    let mut reader = Reader::new(&doc, text, options);
    let root = doc.root_element();
    if root.tag_name().name() != "xml" {
        return Err(reader.error(root, "unknown-node", format!("expected root element <xml>, found <{}>", root.tag_name().name())));
    }
    reader.check_attributes(root, &[])?;
    let mut shelves_node = None;
    for child in reader.elements(root)? {
        match child.tag_name().name() {
            "block" if shelves_node.is_none() => {
                let id = reader.block(child, true)?;
                reader.top_level.push(id);
            }
            "block" => {
                return Err(reader.error(child, "misplaced-node", "blocks must precede the shelves section"));
            }
            "shelves" if shelves_node.is_none() => shelves_node = Some(child),
            "shelves" => return Err(reader.error(child, "duplicate-slot", "more than one shelves section")),
            other => reader.unknown(child, format!("unexpected element <{other}> in <xml>"))?,
        }
    }
    let shelves = match shelves_node {
        Some(node) => reader.shelves(node)?,
        None => ShelfRegistry::default(),
    };
    let Reader { blocks, top_level, warnings, .. } = reader;
    let ws = Workspace::from_parts(blocks.into_values(), top_level, shelves);
    if let Some(diag) = ws.validate().into_iter().find(Diagnostic::is_error) {
        let pos = doc.text_pos_at(root.range().start);
        return Err(ParseError { line: pos.row, column: pos.col, code: "invalid-workspace", message: diag.message });
    }
    Ok(Parsed { value: ws, warnings })
}

pub fn parse_shelf_export(input: &[u8]) -> Result<ShelfExport, ParseError> {
    parse_shelf_export_with(input, ParseOptions::default()).map(|p| p.value)
}

pub fn parse_shelf_export_with(input: &[u8], options: ParseOptions) -> Result<Parsed<ShelfExport>, ParseError> {
    let text = decode(input)?;
    let doc = load(text)?;
    let mut reader = Reader::new(&doc, text, options);
    let root = doc.root_element();
    if root.tag_name().name() != "shelfexport" {
        return Err(reader.error(root, "unknown-node", format!("expected root element <shelfexport>, found <{}>", root.tag_name().name())));
    }
    reader.check_attributes(root, &["version", "name"])?;
    let version_text = reader.required(root, "version")?;
    let version: u32 = version_text
        .parse()
        .map_err(|_| reader.error(root, "invalid-attribute", format!("version {version_text:?} is not an integer")))?;
    if version != EXPORT_FORMAT_VERSION {
        return Err(reader.error(root, "unsupported-version", format!("export version {version} is not supported (expected {EXPORT_FORMAT_VERSION})")));
    }
    let shelf_name = reader.required(root, "name")?.to_owned();

    let mut unresolved: BTreeSet<UnresolvedRef> = BTreeSet::new();
    let mut seen_unresolved = false;
    for child in reader.elements(root)? {
        match child.tag_name().name() {
            "unresolved" if !seen_unresolved && reader.top_level.is_empty() => {
                seen_unresolved = true;
                reader.check_attributes(child, &[])?;
                for entry in reader.elements(child)? {
                    if entry.tag_name().name() != "ref" {
                        reader.unknown(entry, format!("unexpected element <{}> in <unresolved>", entry.tag_name().name()))?;
                        continue;
                    }
                    reader.check_attributes(entry, &["kind", "name"])?;
                    reader.no_children(entry)?;
                    let kind_text = reader.required(entry, "kind")?;
                    let kind: RefKind = kind_text.parse().map_err(|msg| reader.error(entry, "invalid-attribute", msg))?;
                    let name = reader.required(entry, "name")?.to_owned();
                    if !unresolved.insert(UnresolvedRef { kind, name }) {
                        return Err(reader.error(entry, "duplicate-ref", "unresolved reference listed twice"));
                    }
                }
            }
            "unresolved" => {
                return Err(reader.error(child, "misplaced-node", "<unresolved> must appear once, before any block"));
            }
            "block" => {
                let id = reader.block(child, true)?;
                reader.top_level.push(id);
            }
            other => reader.unknown(child, format!("unexpected element <{other}> in <shelfexport>"))?,
        }
    }
    let Reader { blocks, top_level, warnings, .. } = reader;
    Ok(Parsed {
        value: ShelfExport {
            format_version: version,
            shelf_name,
            roots: top_level,
            blocks,
            unresolved_refs: unresolved.into_iter().collect(),
        },
        warnings,
    })
}

fn decode(input: &[u8]) -> Result<&str, ParseError> {
    let text = std::str::from_utf8(input).map_err(|e| {
        let (line, column) = line_col(&input[..e.valid_up_to()]);
        ParseError { line, column, code: "invalid-utf8", message: e.to_string() }
    })?;
    Ok(text.strip_prefix('\u{feff}').unwrap_or(text))
}

/// 1-based position of the byte just after `prefix`.
fn line_col(prefix: &[u8]) -> (u32, u32) {
    let text = String::from_utf8_lossy(prefix);
    let line = text.matches('\n').count() + 1;
    let column = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line as u32, column as u32)
}

fn load(text: &str) -> Result<Document<'_>, ParseError> {
    let options = ParsingOptions { allow_dtd: false, ..ParsingOptions::default() };
    Document::parse_with_options(text, options).map_err(|e| {
        let pos = e.pos();
        let (line, column) = clamp_position(text, pos.row, pos.col);
        ParseError { line, column, code: "malformed", message: e.to_string() }
    })
}

/// Moves a reported position back onto the last character of the input
/// when it points past the end.
fn clamp_position(text: &str, row: u32, col: u32) -> (u32, u32) {
    let lines: Vec<&str> = text.split('\n').collect();
    let row = row.max(1);
    let col = col.max(1);
    let inside = |r: u32, c: u32| {
        lines
            .get(r as usize - 1)
            .is_some_and(|l| {
                let len = l.chars().count() as u32;
                // the newline terminating a line is part of the input too
                c <= len || (c == len + 1 && (r as usize) < lines.len())
            })
    };
    if text.is_empty() || inside(row, col) {
        return (row, col);
    }
    let mut last_row = lines.len() as u32;
    while last_row > 1 && lines[last_row as usize - 1].is_empty() {
        last_row -= 1;
    }
    let len = lines[last_row as usize - 1].chars().count() as u32;
    if last_row < lines.len() as u32 {
        (last_row, len + 1)
    } else {
        (last_row, len.max(1))
    }
}

struct Reader<'a, 'input> {
    doc: &'a Document<'input>,
    lenient: bool,
    warnings: Vec<ParseWarning>,
    blocks: BTreeMap<BlockId, Block>,
    seen_ids: HashSet<String>,
    top_level: Vec<BlockId>,
    _text: &'a str,
}

impl<'a, 'input> Reader<'a, 'input> {
    fn new(doc: &'a Document<'input>, text: &'a str, options: ParseOptions) -> Self {
        Self {
            doc,
            lenient: options.lenient,
            warnings: Vec::new(),
            blocks: BTreeMap::new(),
            seen_ids: HashSet::new(),
            top_level: Vec::new(),
            _text: text,
        }
    }

    fn at(&self, offset: usize, code: &'static str, message: impl Into<String>) -> ParseError {
        let pos = self.doc.text_pos_at(offset);
        ParseError { line: pos.row, column: pos.col, code, message: message.into() }
    }

    fn error(&self, node: Node, code: &'static str, message: impl Into<String>) -> ParseError {
        self.at(node.range().start, code, message)
    }

    /// Rejects `node` in strict mode, records a warning in lenient mode.
    fn unknown(&mut self, node: Node, message: String) -> Result<(), ParseError> {
        let issue = self.error(node, "unknown-node", message);
        if self.lenient {
            self.warnings.push(issue);
            Ok(())
        } else {
            Err(issue)
        }
    }

    fn check_attributes(&mut self, node: Node, allowed: &[&str]) -> Result<(), ParseError> {
        for attr in node.attributes() {
            if attr.namespace().is_none() && allowed.contains(&attr.name()) {
                continue;
            }
            let issue = self.at(
                attr.range().start,
                "unknown-node",
                format!("unexpected attribute {:?} on <{}>", attr.name(), node.tag_name().name()),
            );
            if self.lenient {
                self.warnings.push(issue);
            } else {
                return Err(issue);
            }
        }
        Ok(())
    }

    fn required(&self, node: Node<'a, 'input>, name: &str) -> Result<&'a str, ParseError> {
        match node.attribute(name) {
            None => Err(self.error(node, "missing-attribute", format!("<{}> requires attribute {name:?}", node.tag_name().name()))),
            Some("") => Err(self.error(node, "empty-attribute", format!("attribute {name:?} of <{}> is empty", node.tag_name().name()))),
            Some(value) => Ok(value),
        }
    }

    fn flag(&self, node: Node, name: &str) -> Result<bool, ParseError> {
        match node.attribute(name) {
            None | Some("false") => Ok(false),
            Some("true") => Ok(true),
            Some(other) => Err(self.error(node, "invalid-attribute", format!("{name}={other:?} is not true or false"))),
        }
    }

    /// Element children; whitespace and comments are skipped, other text
    /// is an error.
    fn elements(&mut self, node: Node<'a, 'input>) -> Result<Vec<Node<'a, 'input>>, ParseError> {
        let mut out = Vec::new();
        for child in node.children() {
            if child.is_element() {
                out.push(child);
            } else if child.is_text() {
                if !child.text().unwrap_or_default().trim().is_empty() {
                    return Err(self.error(child, "unexpected-text", format!("text is not allowed inside <{}>", node.tag_name().name())));
                }
            } else if child.is_pi() {
                self.unknown(child, "processing instructions are not allowed".into())?;
            }
        }
        Ok(out)
    }

    fn no_children(&mut self, node: Node<'a, 'input>) -> Result<(), ParseError> {
        for child in self.elements(node)? {
            self.unknown(child, format!("unexpected element <{}> inside <{}>", child.tag_name().name(), node.tag_name().name()))?;
        }
        Ok(())
    }

    /// Character content of a text-only element.
    fn text_content(&mut self, node: Node<'a, 'input>) -> Result<String, ParseError> {
        let mut text = String::new();
        for child in node.children() {
            if child.is_text() {
                text.push_str(child.text().unwrap_or_default());
            } else if child.is_element() || child.is_pi() {
                self.unknown(child, format!("<{}> may only contain text", node.tag_name().name()))?;
            }
        }
        Ok(text)
    }

    fn single_block(&mut self, node: Node<'a, 'input>) -> Result<Option<BlockId>, ParseError> {
        let mut found = None;
        for child in self.elements(node)? {
            if child.tag_name().name() != "block" {
                self.unknown(child, format!("unexpected element <{}> inside <{}>", child.tag_name().name(), node.tag_name().name()))?;
                continue;
            }
            if found.is_some() {
                return Err(self.error(child, "multiple-children", format!("<{}> holds more than one block", node.tag_name().name())));
            }
            found = Some(self.block(child, false)?);
        }
        Ok(found)
    }

    fn block(&mut self, node: Node<'a, 'input>, is_root: bool) -> Result<BlockId, ParseError> {
        self.check_attributes(node, &["type", "id", "x", "y", "collapsed", "disabled"])?;
        let block_type = self.required(node, "type")?;
        let id_text = self.required(node, "id")?;
        if !self.seen_ids.insert(id_text.to_owned()) {
            return Err(self.error(node, "duplicate-id", format!("block id {id_text:?} is used more than once")));
        }
        let id = BlockId::new(id_text);
        let mut block = Block::new(id.clone(), block_type);

        let coordinate = |axis: &str| -> Result<Option<i64>, ParseError> {
            node.attribute(axis)
                .map(|v| v.parse::<i64>().map_err(|_| self.error(node, "invalid-attribute", format!("{axis}={v:?} is not an integer"))))
                .transpose()
        };
        block.position = match (coordinate("x")?, coordinate("y")?, is_root) {
            (Some(x), Some(y), true) => Some(Position::new(x, y)),
            (None, None, false) => None,
            (_, _, true) => return Err(self.error(node, "missing-position", format!("top-level block {id} needs both x and y"))),
            (_, _, false) => return Err(self.error(node, "unexpected-position", format!("nested block {id} must not carry x/y"))),
        };
        block.collapsed = self.flag(node, "collapsed")?;
        block.disabled = self.flag(node, "disabled")?;

        let mut has_comment = false;
        let mut has_next = false;
        for child in self.elements(node)? {
            let tag = child.tag_name().name();
            match tag {
                "field" => {
                    self.check_attributes(child, &["name"])?;
                    let name = self.required(child, "name")?.to_owned();
                    let value = self.text_content(child)?;
                    if block.fields.insert(name.clone(), value).is_some() {
                        return Err(self.error(child, "duplicate-slot", format!("field {name:?} appears twice")));
                    }
                }
                "value" | "statement" => {
                    self.check_attributes(child, &["name"])?;
                    let name = self.required(child, "name")?.to_owned();
                    let target = if tag == "value" { &block.value_inputs } else { &block.statement_inputs };
                    if target.contains_key(&name) {
                        return Err(self.error(child, "duplicate-slot", format!("{tag} {name:?} appears twice")));
                    }
                    let inner = self.single_block(child)?;
                    let target = if tag == "value" { &mut block.value_inputs } else { &mut block.statement_inputs };
                    target.insert(name, inner);
                }
                "comment" => {
                    self.check_attributes(child, &[])?;
                    if has_comment {
                        return Err(self.error(child, "duplicate-slot", "comment appears twice"));
                    }
                    has_comment = true;
                    block.comment = Some(self.text_content(child)?);
                }
                "next" => {
                    self.check_attributes(child, &[])?;
                    if has_next {
                        return Err(self.error(child, "duplicate-slot", "next appears twice"));
                    }
                    has_next = true;
                    block.next = self.single_block(child)?;
                }
                other => self.unknown(child, format!("unexpected element <{other}> inside <block>"))?,
            }
        }
        self.blocks.insert(id.clone(), block);
        Ok(id)
    }

    fn shelves(&mut self, node: Node<'a, 'input>) -> Result<ShelfRegistry, ParseError> {
        self.check_attributes(node, &[])?;
        let roots: HashSet<BlockId> = self.top_level.iter().cloned().collect();
        let mut shelves = Vec::new();
        let mut shelf_ids = HashSet::new();
        let mut shelved = HashSet::new();
        for child in self.elements(node)? {
            if child.tag_name().name() != "shelf" {
                self.unknown(child, format!("unexpected element <{}> in <shelves>", child.tag_name().name()))?;
                continue;
            }
            self.check_attributes(child, &["id", "name", "hidden"])?;
            let id = ShelfId::new(self.required(child, "id")?);
            if !shelf_ids.insert(id.clone()) {
                return Err(self.error(child, "duplicate-shelf-id", format!("shelf id {id} is used more than once")));
            }
            let name = self.required(child, "name")?.to_owned();
            let visible = !self.flag(child, "hidden")?;
            let mut members = Vec::new();
            for member in self.elements(child)? {
                if member.tag_name().name() != "member" {
                    self.unknown(member, format!("unexpected element <{}> in <shelf>", member.tag_name().name()))?;
                    continue;
                }
                self.check_attributes(member, &["block"])?;
                self.no_children(member)?;
                let block = BlockId::new(self.required(member, "block")?);
                if !self.blocks.contains_key(&block) {
                    return Err(self.error(member, "dangling-ref", format!("shelf {id} lists unknown block {block}")));
                }
                if !roots.contains(&block) {
                    return Err(self.error(member, "member-not-root", format!("shelf {id} lists nested block {block}")));
                }
                if !shelved.insert(block.clone()) {
                    return Err(self.error(member, "shelved-twice", format!("block {block} is listed in more than one shelf")));
                }
                members.push(block);
            }
            shelves.push(Shelf { id, name, members, visible });
        }
        Ok(ShelfRegistry::from_shelves(shelves))
    }
}

pub fn serialize_workspace(ws: &Workspace) -> Result<Vec<u8>, SerializeError> {
    let errors: Vec<_> = ws.validate().into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(SerializeError::InvalidWorkspace(errors));
    }
    let mut out = String::new();
    if ws.top_level().is_empty() && ws.shelves().is_empty() {
        out.push_str("<xml></xml>\n");
        return Ok(out.into_bytes());
    }
    out.push_str("<xml>\n");
    for root in ws.top_level() {
        write_block(&mut out, ws.blocks(), root, 1);
    }
    if !ws.shelves().is_empty() {
        out.push_str("  <shelves>\n");
        for shelf in ws.shelves().iter() {
            let _ = write!(out, "    <shelf id=\"{}\" name=\"{}\"", Attr(shelf.id.as_str()), Attr(&shelf.name));
            if !shelf.visible {
                out.push_str(" hidden=\"true\"");
            }
            if shelf.members.is_empty() {
                out.push_str("></shelf>\n");
                continue;
            }
            out.push_str(">\n");
            for member in &shelf.members {
                let _ = writeln!(out, "      <member block=\"{}\"></member>", Attr(member.as_str()));
            }
            out.push_str("    </shelf>\n");
        }
        out.push_str("  </shelves>\n");
    }
    out.push_str("</xml>\n");
    Ok(out.into_bytes())
}

pub fn serialize_shelf_export(doc: &ShelfExport) -> Result<Vec<u8>, SerializeError> {
    let view = Workspace::from_parts(doc.blocks.values().cloned(), doc.roots.clone(), ShelfRegistry::default());
    let errors: Vec<_> = view.validate().into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(SerializeError::InvalidWorkspace(errors));
    }
    let mut out = String::new();
    let _ = writeln!(out, "<shelfexport version=\"{}\" name=\"{}\">", doc.format_version, Attr(&doc.shelf_name));
    let refs: BTreeSet<&UnresolvedRef> = doc.unresolved_refs.iter().collect();
    if refs.is_empty() {
        out.push_str("  <unresolved></unresolved>\n");
    } else {
        out.push_str("  <unresolved>\n");
        for r in refs {
            let _ = writeln!(out, "    <ref kind=\"{}\" name=\"{}\"></ref>", r.kind, Attr(&r.name));
        }
        out.push_str("  </unresolved>\n");
    }
    for root in &doc.roots {
        write_block(&mut out, &doc.blocks, root, 1);
    }
    out.push_str("</shelfexport>\n");
    Ok(out.into_bytes())
}

fn write_block(out: &mut String, blocks: &BTreeMap<BlockId, Block>, id: &BlockId, depth: usize) {
    let Some(block) = blocks.get(id) else {
        return;
    };
    let pad = "  ".repeat(depth);
    let inner = "  ".repeat(depth + 1);
    let _ = write!(out, "{pad}<block type=\"{}\" id=\"{}\"", Attr(&block.block_type), Attr(block.id.as_str()));
    if let Some(Position { x, y }) = block.position {
        let _ = write!(out, " x=\"{x}\" y=\"{y}\"");
    }
    if block.collapsed {
        out.push_str(" collapsed=\"true\"");
    }
    if block.disabled {
        out.push_str(" disabled=\"true\"");
    }
    let empty = block.fields.is_empty()
        && block.value_inputs.is_empty()
        && block.statement_inputs.is_empty()
        && block.comment.is_none()
        && block.next.is_none();
    if empty {
        out.push_str("></block>\n");
        return;
    }
    out.push_str(">\n");
    for (name, value) in &block.fields {
        let _ = writeln!(out, "{inner}<field name=\"{}\">{}</field>", Attr(name), Text(value));
    }
    for (tag, inputs) in [("value", &block.value_inputs), ("statement", &block.statement_inputs)] {
        for (name, child) in inputs {
            let _ = write!(out, "{inner}<{tag} name=\"{}\">", Attr(name));
            match child {
                Some(child) => {
                    out.push('\n');
                    write_block(out, blocks, child, depth + 2);
                    let _ = writeln!(out, "{inner}</{tag}>");
                }
                None => {
                    let _ = writeln!(out, "</{tag}>");
                }
            }
        }
    }
    if let Some(comment) = &block.comment {
        let _ = writeln!(out, "{inner}<comment>{}</comment>", Text(comment));
    }
    if let Some(next) = &block.next {
        let _ = writeln!(out, "{inner}<next>");
        write_block(out, blocks, next, depth + 2);
        let _ = writeln!(out, "{inner}</next>");
    }
    let _ = writeln!(out, "{pad}</block>");
}

/// Attribute value escaping. Whitespace other than space is written as a
/// character reference so attribute-value normalization cannot alter it.
struct Attr<'a>(&'a str);

impl fmt::Display for Attr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.0.chars() {
            match c {
                '&' => f.write_str("&amp;")?,
                '<' => f.write_str("&lt;")?,
                '>' => f.write_str("&gt;")?,
                '"' => f.write_str("&quot;")?,
                '\n' => f.write_str("&#10;")?,
                '\r' => f.write_str("&#13;")?,
                '\t' => f.write_str("&#9;")?,
                c => f.write_char(c)?,
            }
        }
        Ok(())
    }
}

/// Character data escaping; line breaks become character references so
/// every element stays on one line.
struct Text<'a>(&'a str);

impl fmt::Display for Text<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in self.0.chars() {
            match c {
                '&' => f.write_str("&amp;")?,
                '<' => f.write_str("&lt;")?,
                '>' => f.write_str("&gt;")?,
                '\n' => f.write_str("&#10;")?,
                '\r' => f.write_str("&#13;")?,
                c => f.write_char(c)?,
            }
        }
        Ok(())
    }
}
