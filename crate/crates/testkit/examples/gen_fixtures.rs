//! Regenerates the fixture files under `crates/testkit/fixtures/`.
//!
//! ```text
//! cargo run -p blockshelf-testkit --example gen_fixtures
//! ```

use std::fs;

use blockshelf_core::{serialize_shelf_export, serialize_workspace};
use blockshelf_testkit::{builtin_fixtures, fixture_path, fixtures_dir, pusheen};

fn main() {
    fs::create_dir_all(fixtures_dir()).expect("create fixtures dir");
    for (stem, ws) in builtin_fixtures() {
        let bytes = serialize_workspace(&ws).expect("fixture serializes");
        fs::write(fixture_path(&stem), bytes).expect("write fixture");
    }
    let ws = pusheen();
    let timer = ws.shelves().by_name("Timer").next().expect("Timer shelf").id.clone();
    let export = ws.export_shelf(&timer).expect("export Timer");
    let bytes = serialize_shelf_export(&export).expect("export serializes");
    fs::write(fixtures_dir().join("pusheen-timer.shelfexport.xml"), bytes).expect("write export");
    println!("wrote fixtures to {}", fixtures_dir().display());
}
