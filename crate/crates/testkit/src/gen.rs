//! Seeded generator of valid workspaces over the built-in vocabulary.

use blockshelf_core::semantics::{BlockSemantics, RuleKind};
use blockshelf_core::{Block, BlockId, Position, Shelf, ShelfId, ShelfRegistry, Workspace};
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// Upper bound on blocks; the actual count is drawn from `0..=max_blocks`.
    pub max_blocks: usize,
    pub max_shelves: usize,
    /// Mix markup characters, line breaks and non-ASCII into texts.
    pub odd_text: bool,
    /// Occasionally use block ids outside the `b<n>` scheme.
    pub odd_ids: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self { max_blocks: 200, max_shelves: 4, odd_text: true, odd_ids: true }
    }
}

pub const COMPONENTS: &[&str] = &["Button1", "Label1", "Clock1", "Ball1", "Canvas1", "Notifier1", "Item3", "Screen1"];
pub const EVENTS: &[&str] = &["Click", "Timer", "Initialize", "LongClick", "Touched"];
pub const PROPERTIES: &[&str] = &["Text", "Visible", "Picture", "TimerEnabled", "Width"];
pub const METHODS: &[&str] = &["ShowAlert", "Play", "Clear"];
pub const NAMES: &[&str] = &["score", "first", "picked", "reset_timer", "game_over", "check_pair", "total"];
pub const NUMBERS: &[&str] = &["0", "1", "2", "16", "17", "-3", "2.5", "1e3"];
pub const COMMENTS: &[&str] = &[
    "reset the timer",
    "Timer reset after Restart",
    "score handler",
    "ITEM 5 shows the cat",
    "todo",
    "check identical photos",
];
pub const SHELF_NAMES: &[&str] = &["Buttons", "Timer", "Matching", "Copy of Buttons", "Alerts", "Buttons"];
const ODD_TEXT: &[&str] = &[
    "",
    " ",
    "a & b",
    "<tag attr=\"v\">",
    "it's \"quoted\"",
    "line one\nline two",
    "crlf\r\nend",
    "\ttabbed ",
    "  leading and trailing  ",
    "]]> &amp; &#10;",
    "caf\u{e9} \u{732b} \u{1f431}",
    "back\\slash (paren) semi;colon",
];
const ODD_NAMES: &[&str] = &["My Label", "Comp.Sub", "x y", "caf\u{e9}", "a&b"];
const EXPRESSIONS: &[&str] = &[
    "math_number",
    "math_add",
    "math_subtract",
    "math_multiply",
    "math_divide",
    "math_compare",
    "logic_boolean",
    "logic_operation",
    "logic_negate",
    "text",
    "lexical_variable_get",
    "component_get",
    "procedures_callreturn",
];
const LEAF_EXPRESSIONS: &[&str] = &[
    "math_number",
    "logic_boolean",
    "text",
    "lexical_variable_get",
    "component_get",
    "procedures_callreturn",
];
const STATEMENTS: &[&str] = &[
    "component_set",
    "component_method",
    "procedures_callnoreturn",
    "lexical_variable_set",
    "controls_if",
    "controls_repeat",
];
const TOP_FORMS: &[&str] = &["component_event", "procedures_defnoreturn", "procedures_defreturn", "global_declaration"];
const MAX_DEPTH: usize = 5;

/// A random valid workspace with between 0 and `cfg.max_blocks` blocks.
pub fn random_workspace<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Workspace {
    let target = rng.gen_range(0..=cfg.max_blocks);
    workspace_with_blocks(rng, cfg, target)
}

/// A random valid workspace with exactly `count` blocks.
pub fn workspace_with_blocks<R: Rng>(rng: &mut R, cfg: &GenConfig, count: usize) -> Workspace {
    let odd_ids = cfg.odd_ids && rng.gen_bool(0.2);
    let mut g = Gen {
        rng,
        cfg,
        sem: BlockSemantics::builtin(),
        left: count,
        seq: 0,
        odd_ids,
        blocks: Vec::new(),
    };
    let mut roots = Vec::new();
    while g.left > 0 {
        roots.push(g.root());
    }
    let shelves = g.shelves(&roots);
    let ws = Workspace::from_parts(g.blocks, roots, shelves);
    debug_assert!(ws.validate().iter().all(|d| !d.is_error()), "{:?}", ws.validate());
    ws
}

struct Gen<'a, R> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    sem: BlockSemantics,
    left: usize,
    seq: usize,
    odd_ids: bool,
    blocks: Vec<Block>,
}

impl<R: Rng> Gen<'_, R> {
    fn pick<'p>(&mut self, pool: &[&'p str]) -> &'p str {
        pool.choose(self.rng).copied().unwrap_or_default()
    }

    fn text(&mut self, pool: &[&str]) -> String {
        if self.cfg.odd_text && self.rng.gen_bool(0.25) {
            self.pick(ODD_TEXT).to_owned()
        } else {
            self.pick(pool).to_owned()
        }
    }

    fn name(&mut self, pool: &[&str]) -> String {
        if self.cfg.odd_text && self.rng.gen_bool(0.05) {
            self.pick(ODD_NAMES).to_owned()
        } else {
            self.pick(pool).to_owned()
        }
    }

    fn field_value(&mut self, block_type: &str, field: &str) -> String {
        match field {
            "COMPONENT" => self.name(COMPONENTS),
            "EVENT" => self.name(EVENTS),
            "PROPERTY" => self.name(PROPERTIES),
            "METHOD" => self.name(METHODS),
            "NAME" | "PROCNAME" | "VAR" => self.name(NAMES),
            "NUM" => {
                if self.rng.gen_bool(0.5) {
                    self.pick(NUMBERS).to_owned()
                } else {
                    self.rng.gen_range(-1000..1000).to_string()
                }
            }
            "BOOL" => self.pick(&["TRUE", "FALSE"]).to_owned(),
            "OP" if block_type == "logic_operation" => self.pick(&["AND", "OR"]).to_owned(),
            "OP" => self.pick(&["EQ", "NEQ", "LT", "LTE", "GT", "GTE"]).to_owned(),
            _ => self.text(&["hello", "photo1.png", "Game over!", "17"]),
        }
    }

    fn id(&mut self) -> BlockId {
        self.seq += 1;
        if self.odd_ids && self.rng.gen_bool(0.3) {
            BlockId::new(format!("q{}:\"x\"&<{}>", self.seq, self.rng.gen_range(0..100)))
        } else {
            BlockId::new(format!("b{}", self.seq))
        }
    }

    fn make(&mut self, block_type: &str) -> Block {
        debug_assert!(self.left > 0);
        self.left -= 1;
        let id = self.id();
        let mut block = Block::new(id, block_type);
        let rule = self.sem.rule(block_type).expect("vocabulary type").clone();
        for field in rule.fields {
            let value = self.field_value(block_type, field);
            block.fields.insert((*field).to_owned(), value);
        }
        if self.rng.gen_bool(0.15) {
            block.comment = Some(self.text(COMMENTS));
        }
        if self.rng.gen_bool(0.08) {
            block.disabled = true;
        }
        block
    }

    fn fill(&mut self, block: &mut Block, depth: usize) {
        let rule = self.sem.rule(&block.block_type).expect("vocabulary type").clone();
        for name in rule.values {
            match self.rng.gen_range(0..10) {
                0..=5 if self.left > 0 && depth < MAX_DEPTH => {
                    let child = self.expression(depth + 1);
                    block.value_inputs.insert((*name).to_owned(), Some(child));
                }
                0..=7 => {
                    block.value_inputs.insert((*name).to_owned(), None);
                }
                _ => {}
            }
        }
        for name in rule.statements {
            match self.rng.gen_range(0..10) {
                0..=5 if self.left > 0 && depth < MAX_DEPTH => {
                    let child = self.chain(depth + 1);
                    block.statement_inputs.insert((*name).to_owned(), Some(child));
                }
                0..=7 => {
                    block.statement_inputs.insert((*name).to_owned(), None);
                }
                _ => {}
            }
        }
    }

    fn expression(&mut self, depth: usize) -> BlockId {
        let pool = if depth >= MAX_DEPTH - 1 || self.left < 3 { LEAF_EXPRESSIONS } else { EXPRESSIONS };
        let block_type = self.pick(pool);
        let mut block = self.make(block_type);
        self.fill(&mut block, depth);
        let id = block.id.clone();
        self.blocks.push(block);
        id
    }

    fn statement(&mut self, depth: usize) -> Block {
        let block_type = self.pick(STATEMENTS);
        let mut block = self.make(block_type);
        self.fill(&mut block, depth);
        block
    }

    /// A `next`-linked run of one to four statements.
    fn chain(&mut self, depth: usize) -> BlockId {
        let len = self.rng.gen_range(1..=4);
        let mut run = vec![self.statement(depth)];
        while run.len() < len && self.left > 0 {
            let s = self.statement(depth);
            run.push(s);
        }
        let head = run[0].id.clone();
        for i in (1..run.len()).rev() {
            run[i - 1].next = Some(run[i].id.clone());
        }
        self.blocks.extend(run);
        head
    }

    fn root(&mut self) -> BlockId {
        let id = match self.rng.gen_range(0..20) {
            0..=1 => self.expression(0),
            2..=3 => self.chain(0),
            _ => {
                let block_type = self.pick(TOP_FORMS);
                let mut block = self.make(block_type);
                self.fill(&mut block, 0);
                let id = block.id.clone();
                self.blocks.push(block);
                id
            }
        };
        let x = self.rng.gen_range(-5000..5000);
        let y = self.rng.gen_range(-5000..5000);
        let collapsed = self.rng.gen_bool(0.15);
        let block = self.blocks.iter_mut().find(|b| b.id == id).expect("root block");
        block.position = Some(Position::new(x, y));
        block.collapsed = collapsed;
        debug_assert!(
            self.sem.rule(&block.block_type).map(|r| r.kind) != Some(RuleKind::Expression) || block.next.is_none()
        );
        id
    }

    fn shelves(&mut self, roots: &[BlockId]) -> ShelfRegistry {
        let count = self.rng.gen_range(0..=self.cfg.max_shelves);
        let mut shelves: Vec<Shelf> = (1..=count)
            .map(|i| Shelf {
                id: ShelfId::new(format!("s{i}")),
                name: self.name(SHELF_NAMES),
                members: Vec::new(),
                visible: self.rng.gen_bool(0.7),
            })
            .collect();
        if shelves.is_empty() {
            return ShelfRegistry::default();
        }
        for root in roots {
            if self.rng.gen_bool(0.6) {
                let i = self.rng.gen_range(0..shelves.len());
                shelves[i].members.push(root.clone());
            }
        }
        ShelfRegistry::from_shelves(shelves)
    }
}
