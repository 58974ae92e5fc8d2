//! The fixture apps: the Pusheen memory game, the Calculator and the
//! tutorial project, plus the generated corpus written to `fixtures/`.

use std::fs;
use std::path::{Path, PathBuf};

use blockshelf_core::{BlockId, Query, Workspace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::build::Builder;
use crate::gen::{random_workspace, GenConfig};

/// Blocks in the tutorial project.
pub const TUTORIAL_BLOCKS: usize = 197;
/// Screens in the tutorial project.
pub const TUTORIAL_SCREENS: usize = 6;
/// Generated workspaces that complete the fixture corpus.
pub const CORPUS_FILES: usize = 47;

/// A Pusheen post-test task: where its target lives and how a user would
/// look for it.
#[derive(Debug, Clone)]
pub struct Task {
    pub number: u8,
    pub description: &'static str,
    pub shelf: &'static str,
    pub query: Query,
}

pub fn pusheen_tasks() -> Vec<Task> {
    let task = |number, description, shelf, needle: &str| Task {
        number,
        description,
        shelf,
        query: Query::comment(needle),
    };
    vec![
        task(1, "Add the function of button <item 7>", "Buttons", "item 7"),
        task(2, "Correct the response when choosing two identical photos", "Matching", "identical photos"),
        task(3, "Add the display of a cat's photo after hitting <item 5>", "Buttons", "item 5"),
        task(4, "Correct the timer reset after hitting button <Restart>", "Restart", "timer"),
        task(5, "Correct the text alert when game is over or finished", "Alerts", "game is over"),
    ]
}

/// Shelf names of the Pusheen fixture, in creation order.
pub const PUSHEEN_SHELVES: [&str; 7] = ["Setup", "Buttons", "More Buttons", "Matching", "Timer", "Restart", "Alerts"];

/// Pusheen The Cat: sixteen numbered photo buttons, a pair scores two points
/// when its numbers sum to 17, and the game ends at 16 points.
pub fn pusheen() -> Workspace {
    let (ws, _) = pusheen_parts();
    ws
}

/// The Pusheen fixture before any shelf is created, with the roots each
/// shelf would receive.
pub fn pusheen_unshelved() -> (Workspace, Vec<(&'static str, Vec<BlockId>)>) {
    let (b, groups) = pusheen_builder();
    (b.finish(), groups)
}

fn pusheen_parts() -> (Workspace, Vec<(&'static str, Vec<BlockId>)>) {
    let (mut b, groups) = pusheen_builder();
    for (name, roots) in &groups {
        b.shelf(name, roots);
    }
    (b.finish(), groups)
}

fn pusheen_builder() -> (Builder, Vec<(&'static str, Vec<BlockId>)>) {
    let mut b = Builder::new();
    let mut setup = Vec::new();
    for var in ["score", "first", "picked", "elapsed"] {
        let zero = b.num(0);
        setup.push(b.global(var, zero));
    }
    let reset = b.call("reset_timer");
    let score = b.get("score");
    let show = b.set_prop("ScoreLabel", "Text", score);
    setup.push(b.event("Screen1", "Initialize", vec![reset, show]));

    let mut items = Vec::new();
    for n in 1..=16 {
        let component = format!("Item{n}");
        let body = if n == 7 {
            Vec::new()
        } else {
            let value = b.num(n);
            let pick = b.set_var("picked", value);
            let first = b.get("first");
            let zero = b.num(0);
            let cond = b.compare("EQ", first, zero);
            let picked = b.get("picked");
            let remember = b.set_var("first", picked);
            let check = b.call("check_pair");
            let branch = b.if_else(cond, vec![remember], vec![check]);
            let photo = b.text(&format!("photo{n}.png"));
            let flip = b.set_prop(&component, "Image", photo);
            vec![pick, flip, branch]
        };
        let handler = b.event(&component, "Click", body);
        match n {
            5 => {
                b.comment(&handler, "item 5: the cat photo is not displayed after the pair is shown");
            }
            7 => {
                b.comment(&handler, "item 7: button has no function yet");
            }
            _ => {}
        }
        items.push(handler);
    }

    let first = b.get("first");
    let picked = b.get("picked");
    let sum = b.arith("math_add", first, picked);
    let seventeen = b.num(17);
    let pair = b.compare("EQ", sum, seventeen);
    let score = b.get("score");
    let two = b.num(2);
    let points = b.arith("math_add", score, two);
    let add = b.set_var("score", points);
    let score = b.get("score");
    let show = b.set_prop("ScoreLabel", "Text", score);
    let score = b.get("score");
    let sixteen = b.num(16);
    let done = b.compare("GTE", score, sixteen);
    let over = b.call("game_over");
    let finish = b.if_else(done, vec![over], Vec::new());
    let scored = b.if_else(pair, vec![add, show, finish], Vec::new());
    let zero = b.num(0);
    let clear = b.set_var("first", zero);
    let check_pair = b.procedure("check_pair", vec![scored, clear]);
    b.comment(&check_pair, "choosing two identical photos should not count as a pair");

    let zero = b.num(0);
    let restart_clock = b.set_var("elapsed", zero);
    let on = b.boolean(true);
    let enable = b.set_prop("Clock1", "TimerEnabled", on);
    let reset_timer = b.procedure("reset_timer", vec![restart_clock, enable]);
    let elapsed = b.get("elapsed");
    let one = b.num(1);
    let tick = b.arith("math_add", elapsed, one);
    let step = b.set_var("elapsed", tick);
    let elapsed = b.get("elapsed");
    let display = b.set_prop("TimeLabel", "Text", elapsed);
    let clock = b.event("Clock1", "Timer", vec![step, display]);

    let reset = b.call("reset_timer");
    b.comment(&reset, "Restart should reset the timer before a new round");
    let zero = b.num(0);
    let clear_score = b.set_var("score", zero);
    let zero = b.num(0);
    let clear_first = b.set_var("first", zero);
    let zero = b.num(0);
    let show = b.set_prop("ScoreLabel", "Text", zero);
    let restart = b.event("Restart", "Click", vec![reset, clear_score, clear_first, show]);

    let message = b.text("Game over!");
    let alert = b.invoke("Notifier1", "ShowAlert", Some(message));
    b.comment(&alert, "text alert shown when the game is over or finished");
    let off = b.boolean(false);
    let stop = b.set_prop("Clock1", "TimerEnabled", off);
    let game_over = b.procedure("game_over", vec![stop, alert]);

    let groups = vec![
        ("Setup", setup),
        ("Buttons", items[..8].to_vec()),
        ("More Buttons", items[8..].to_vec()),
        ("Matching", vec![check_pair]),
        ("Timer", vec![reset_timer, clock]),
        ("Restart", vec![restart]),
        ("Alerts", vec![game_over]),
    ];
    (b, groups)
}

/// The pre-test Calculator: digits 0-8, three operators, equals and clear.
pub fn calculator() -> Workspace {
    let mut b = Builder::new();
    let mut globals = Vec::new();
    for var in ["current", "stored"] {
        let zero = b.num(0);
        globals.push(b.global(var, zero));
    }
    let none = b.text("");
    globals.push(b.global("op", none));

    let mut digits = Vec::new();
    for d in 0..=8 {
        let current = b.get("current");
        let ten = b.num(10);
        let shifted = b.arith("math_multiply", current, ten);
        let digit = b.num(if d == 5 { 6 } else { d });
        let next = b.arith("math_add", shifted, digit);
        let update = b.set_var("current", next);
        let show = b.call("show_current");
        let handler = b.event(&format!("Btn{d}"), "Click", vec![update, show]);
        if d == 5 {
            b.comment(&handler, "button 5 appends the wrong digit");
        }
        digits.push(handler);
    }

    let mut operators = Vec::new();
    for (component, symbol) in [("BtnPlus", "-"), ("BtnMinus", "-"), ("BtnTimes", "*")] {
        let current = b.get("current");
        let keep = b.set_var("stored", current);
        let sym = b.text(symbol);
        let choose = b.set_var("op", sym);
        let zero = b.num(0);
        let clear = b.set_var("current", zero);
        let handler = b.event(component, "Click", vec![keep, choose, clear]);
        if component == "BtnPlus" {
            b.comment(&handler, "the + button stores the wrong operator");
        }
        operators.push(handler);
    }

    let mut branches = Vec::new();
    for (symbol, block_type) in [("+", "math_add"), ("-", "math_subtract"), ("*", "math_multiply")] {
        let op = b.get("op");
        let sym = b.text(symbol);
        let cond = b.compare("EQ", op, sym);
        let stored = b.get("stored");
        let current = b.get("current");
        let result = b.arith(block_type, stored, current);
        let assign = b.set_var("current", result);
        branches.push(b.if_else(cond, vec![assign], Vec::new()));
    }
    let equals = b.event("BtnEquals", "Click", branches);
    b.comment(&equals, "= ignores the stored operand when no operator was chosen");
    let current = b.get("current");
    let show = b.set_prop("Display", "Text", current);
    let show_current = b.procedure("show_current", vec![show]);
    let zero = b.num(0);
    let reset = b.set_var("current", zero);
    let zero = b.num(0);
    let reset_stored = b.set_var("stored", zero);
    let show = b.call("show_current");
    let clear = b.event("BtnClear", "Click", vec![reset, reset_stored, show]);

    b.shelf("Globals", &globals);
    b.shelf("Digits", &digits);
    b.shelf("Operators", &operators);
    b.shelf("Result", &[equals, show_current, clear]);
    b.finish()
}

/// The tutorial project: six screens with a button, a canvas, a ball, a
/// timer, a graph and a text tag, exactly 197 blocks.
pub fn tutorial() -> Workspace {
    let gadgets = ["Button", "Canvas", "Ball", "Clock", "Graph", "TextTag"];
    let mut b = Builder::new();
    let mut handlers = Vec::new();
    for screen in 1..=TUTORIAL_SCREENS {
        let gadget = gadgets[screen - 1];
        let label = format!("Label{screen}");
        let greeting = b.text(&format!("Screen {screen}: {gadget}"));
        let greet = b.set_prop(&label, "Text", greeting);
        let on = b.boolean(true);
        let show = b.set_prop(&format!("{gadget}{screen}"), "Visible", on);
        handlers.push(b.event(&format!("Screen{screen}"), "Initialize", vec![greet, show]));

        let x = b.prop(&format!("{gadget}{screen}"), "X");
        let step = b.num(screen * 5);
        let moved = b.arith("math_add", x, step);
        let mv = b.set_prop(&format!("{gadget}{screen}"), "X", moved);
        let taps = b.get("taps");
        let one = b.num(1);
        let more = b.arith("math_add", taps, one);
        let count_tap = b.set_var("taps", more);
        let taps = b.get("taps");
        let limit = b.num(10);
        let cond = b.compare("GT", taps, limit);
        let msg = b.text("Well done");
        let alert = b.invoke("Notifier1", "ShowAlert", Some(msg));
        let zero = b.num(0);
        let reset = b.set_var("taps", zero);
        let branch = b.if_else(cond, vec![alert, reset], Vec::new());
        let three = b.num(3);
        let width = b.prop(&format!("{gadget}{screen}"), "Width");
        let grow = b.set_prop(&format!("{gadget}{screen}"), "Width", width);
        let again = b.repeat(three, vec![grow]);
        handlers.push(b.event(&format!("{gadget}{screen}"), "Click", vec![mv, count_tap, branch, again]));
    }
    let zero = b.num(0);
    b.global("taps", zero);

    let mut count = b.workspace().block_count();
    let mut filler = Vec::new();
    while TUTORIAL_BLOCKS - count >= 3 {
        let n = filler.len() + 1;
        let value = b.text(&format!("step {n}"));
        filler.push(b.set_prop("Label1", "Text", value));
        count += 2;
    }
    while count + 1 < TUTORIAL_BLOCKS {
        filler.push(b.call("reset_board"));
        count += 1;
    }
    b.event("Screen1", "BackPressed", filler);
    let ws = b.finish();
    debug_assert_eq!(ws.block_count(), TUTORIAL_BLOCKS);
    ws
}

/// Generator settings of the fixture corpus.
pub fn corpus_config() -> GenConfig {
    GenConfig { max_blocks: 200, ..GenConfig::default() }
}

pub fn corpus_workspace(index: usize) -> Workspace {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_0000 + index as u64);
    random_workspace(&mut rng, &corpus_config())
}

/// Every fixture workspace with the file stem it is stored under.
pub fn builtin_fixtures() -> Vec<(String, Workspace)> {
    let mut out = vec![
        ("pusheen".to_owned(), pusheen()),
        ("calculator".to_owned(), calculator()),
        ("tutorial".to_owned(), tutorial()),
    ];
    for i in 1..=CORPUS_FILES {
        out.push((format!("corpus-{i:02}"), corpus_workspace(i)));
    }
    out
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Paths of all `*.bshelf.xml` fixture files, sorted.
pub fn fixture_files() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(fixtures_dir())
        .map(|dir| {
            dir.filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.to_string_lossy().ends_with(".bshelf.xml"))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

pub fn fixture_path(stem: &str) -> PathBuf {
    fixtures_dir().join(format!("{stem}.bshelf.xml"))
}
