use std::fmt::Display;

use blockshelf_core::{BlockId, Position, Slot, Workspace};

/// Small DSL over the workspace edit API for authoring fixture apps.
/// Children are built first and then plugged into their parent.
pub struct Builder {
    ws: Workspace,
    next_y: i64,
}

impl Default for Builder {
    fn default() -> Self {
        Self::new()
    }
}

impl Builder {
    pub fn new() -> Self {
        Self { ws: Workspace::new(), next_y: 20 }
    }

    pub fn finish(self) -> Workspace {
        self.ws
    }

    pub fn workspace(&mut self) -> &mut Workspace {
        &mut self.ws
    }

    fn add(&mut self, block_type: &str, fields: &[(&str, String)]) -> BlockId {
        let y = self.next_y;
        self.next_y += 60;
        self.ws
            .add_block(block_type, fields.iter().map(|(k, v)| (*k, v.clone())), Position::new(20, y))
            .expect("fixture block")
    }

    fn plug(&mut self, parent: &BlockId, slot: Slot, child: &BlockId) {
        self.ws.connect(parent, slot, child).expect("fixture connection");
    }

    fn value(&mut self, parent: &BlockId, name: &str, child: BlockId) {
        self.plug(parent, Slot::Value(name.into()), &child);
    }

    fn body(&mut self, parent: &BlockId, input: &str, stmts: Vec<BlockId>) {
        let mut prev: Option<BlockId> = None;
        for stmt in stmts {
            match &prev {
                None => self.plug(parent, Slot::Statement(input.into()), &stmt),
                Some(p) => self.plug(p, Slot::Next, &stmt),
            }
            prev = Some(stmt);
        }
    }

    pub fn comment(&mut self, id: &BlockId, text: &str) -> BlockId {
        self.ws.set_comment(id, Some(text.into())).expect("fixture comment");
        id.clone()
    }

    pub fn num(&mut self, n: impl Display) -> BlockId {
        self.add("math_number", &[("NUM", n.to_string())])
    }

    pub fn text(&mut self, s: &str) -> BlockId {
        self.add("text", &[("TEXT", s.into())])
    }

    pub fn boolean(&mut self, b: bool) -> BlockId {
        let v = if b { "TRUE" } else { "FALSE" };
        self.add("logic_boolean", &[("BOOL", v.into())])
    }

    pub fn get(&mut self, var: &str) -> BlockId {
        self.add("lexical_variable_get", &[("VAR", var.into())])
    }

    pub fn prop(&mut self, component: &str, property: &str) -> BlockId {
        self.add("component_get", &[("COMPONENT", component.into()), ("PROPERTY", property.into())])
    }

    pub fn call_fn(&mut self, name: &str) -> BlockId {
        self.add("procedures_callreturn", &[("PROCNAME", name.into())])
    }

    /// `math_add`, `math_subtract`, `math_multiply` or `math_divide`.
    pub fn arith(&mut self, block_type: &str, a: BlockId, b: BlockId) -> BlockId {
        let id = self.add(block_type, &[]);
        self.value(&id, "A", a);
        self.value(&id, "B", b);
        id
    }

    pub fn compare(&mut self, op: &str, a: BlockId, b: BlockId) -> BlockId {
        let id = self.add("math_compare", &[("OP", op.into())]);
        self.value(&id, "A", a);
        self.value(&id, "B", b);
        id
    }

    pub fn logic(&mut self, op: &str, a: BlockId, b: BlockId) -> BlockId {
        let id = self.add("logic_operation", &[("OP", op.into())]);
        self.value(&id, "A", a);
        self.value(&id, "B", b);
        id
    }

    pub fn not(&mut self, x: BlockId) -> BlockId {
        let id = self.add("logic_negate", &[]);
        self.value(&id, "BOOL", x);
        id
    }

    pub fn set_var(&mut self, var: &str, value: BlockId) -> BlockId {
        let id = self.add("lexical_variable_set", &[("VAR", var.into())]);
        self.value(&id, "VALUE", value);
        id
    }

    pub fn set_prop(&mut self, component: &str, property: &str, value: BlockId) -> BlockId {
        let id = self.add("component_set", &[("COMPONENT", component.into()), ("PROPERTY", property.into())]);
        self.value(&id, "VALUE", value);
        id
    }

    pub fn invoke(&mut self, component: &str, method: &str, arg: Option<BlockId>) -> BlockId {
        let id = self.add("component_method", &[("COMPONENT", component.into()), ("METHOD", method.into())]);
        if let Some(arg) = arg {
            self.value(&id, "ARG", arg);
        }
        id
    }

    pub fn call(&mut self, name: &str) -> BlockId {
        self.add("procedures_callnoreturn", &[("PROCNAME", name.into())])
    }

    pub fn if_else(&mut self, cond: BlockId, then: Vec<BlockId>, otherwise: Vec<BlockId>) -> BlockId {
        let id = self.add("controls_if", &[]);
        self.value(&id, "IF", cond);
        self.body(&id, "DO", then);
        self.body(&id, "ELSE", otherwise);
        id
    }

    pub fn repeat(&mut self, times: BlockId, body: Vec<BlockId>) -> BlockId {
        let id = self.add("controls_repeat", &[]);
        self.value(&id, "TIMES", times);
        self.body(&id, "DO", body);
        id
    }

    pub fn event(&mut self, component: &str, event: &str, body: Vec<BlockId>) -> BlockId {
        let id = self.add("component_event", &[("COMPONENT", component.into()), ("EVENT", event.into())]);
        self.body(&id, "DO", body);
        id
    }

    pub fn procedure(&mut self, name: &str, body: Vec<BlockId>) -> BlockId {
        let id = self.add("procedures_defnoreturn", &[("NAME", name.into())]);
        self.body(&id, "STACK", body);
        id
    }

    pub fn function(&mut self, name: &str, body: Vec<BlockId>, result: BlockId) -> BlockId {
        let id = self.add("procedures_defreturn", &[("NAME", name.into())]);
        self.body(&id, "STACK", body);
        self.value(&id, "RETURN", result);
        id
    }

    pub fn global(&mut self, name: &str, value: BlockId) -> BlockId {
        let id = self.add("global_declaration", &[("NAME", name.into())]);
        self.value(&id, "VALUE", value);
        id
    }

    pub fn shelf(&mut self, name: &str, roots: &[BlockId]) {
        self.ws.create_shelf(name, roots).expect("fixture shelf");
    }
}
