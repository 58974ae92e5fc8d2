//! Command-line front end: every engine operation over workspace files.
//!
//! [`run`] is the whole program; the `blockshelf` binary only wires it to
//! the process arguments and standard streams. Mutating subcommands rewrite
//! the workspace file canonically through an atomic rename.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use blockshelf_core::codegen::{root_key, GenerateError};
use blockshelf_core::search::SearchError;
use blockshelf_core::shelf::DEFAULT_DUPLICATE_OFFSET;
use blockshelf_core::xml::{parse_workspace_with, ParseOptions, SerializeError};
use blockshelf_core::{
    corpus_stats, generate, parse_shelf_export, search, serialize_shelf_export, serialize_workspace, BlockId,
    Diagnostic, EditError, NamePolicy, ParseError, Query, ShelfId, ShelfStatus, Workspace,
};
use blockshelf_service::persist::write_atomic;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser)]
#[command(name = "blockshelf", version, about = "Organize block-based programs into shelves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print block, root, and shelf counts.
    Inspect { file: PathBuf },
    /// Check that a workspace file parses and satisfies every invariant.
    Validate {
        file: PathBuf,
        /// Report unknown elements and attributes as warnings instead of errors.
        #[arg(long)]
        lenient: bool,
    },
    /// Rewrite a workspace file in canonical form.
    Fmt {
        file: PathBuf,
        /// Rewrite the file in place instead of printing to stdout.
        #[arg(long)]
        write: bool,
    },
    /// Create, inspect, and operate on shelves.
    Shelf {
        #[command(subcommand)]
        action: ShelfCommand,
    },
    /// Set or clear the comment on a block.
    Comment {
        block: String,
        file: PathBuf,
        /// New comment text; omit to clear.
        #[arg(long)]
        text: Option<String>,
    },
    /// Find blocks by comment, type, field value, or shelf.
    Search(SearchArgs),
    /// Block-count statistics over a corpus of workspace files.
    Stats {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = blockshelf_core::search::DEFAULT_THRESHOLD)]
        threshold: usize,
        #[arg(long)]
        json: bool,
    },
    /// Print the canonical program.
    Codegen {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Serve the HTTP API over one workspace file.
    Serve {
        file: PathBuf,
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Args)]
struct SearchArgs {
    file: PathBuf,
    /// Case-insensitive comment substring.
    #[arg(long)]
    comment: Option<String>,
    #[arg(long = "type")]
    block_type: Option<String>,
    /// Field criterion of the form NAME=VALUE.
    #[arg(long, value_parser = parse_field)]
    field: Option<(String, String)>,
    /// Shelf name or id.
    #[arg(long)]
    shelf: Option<String>,
    #[arg(long)]
    json: bool,
}

fn parse_field(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(n, v)| (n.to_owned(), v.to_owned()))
        .ok_or_else(|| "expected NAME=VALUE".to_owned())
}

#[derive(Args)]
struct ShelfFile {
    /// Shelf name or id.
    shelf: String,
    file: PathBuf,
}

#[derive(Args)]
struct ShelfRoots {
    /// Shelf name or id.
    shelf: String,
    /// Root block ids followed by the workspace file.
    #[arg(value_name = "ROOT... FILE", required = true, num_args = 2..)]
    rest: Vec<String>,
}

#[derive(Subcommand)]
enum ShelfCommand {
    /// Create a shelf from root blocks.
    Create {
        name: String,
        /// Root block ids followed by the workspace file.
        #[arg(value_name = "ROOT... FILE", required = true, num_args = 1..)]
        rest: Vec<String>,
    },
    /// List every shelf with its aggregate state.
    List { file: PathBuf },
    /// Show one shelf and its member roots.
    Show(ShelfFile),
    /// Make a shelf visible.
    Vis(ShelfFile),
    /// Hide a shelf.
    Hide(ShelfFile),
    /// Collapse every member root.
    Min(ShelfFile),
    /// Expand every member root.
    Max(ShelfFile),
    /// Enable every member root.
    On(ShelfFile),
    /// Disable every member root.
    Off(ShelfFile),
    /// Deep-copy a shelf into "Copy of NAME".
    Dup(ShelfFile),
    /// Add roots to an existing shelf.
    Assign(ShelfRoots),
    /// Remove roots from a shelf.
    Unassign(ShelfRoots),
    /// Write a shelf as a self-contained export document.
    Export {
        file: PathBuf,
        #[arg(long)]
        shelf: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Import an export document as a new shelf.
    Import {
        file: PathBuf,
        #[arg(long = "from")]
        from: PathBuf,
        #[arg(long, default_value = "suffix")]
        name_policy: NamePolicy,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("io: {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{err}", path.display())]
    Parse { path: PathBuf, err: ParseError },
    #[error("{code}: {0}", code = .0.code())]
    Edit(#[from] EditError),
    #[error("{code}: {0}", code = .0.code())]
    Search(#[from] SearchError),
    #[error("codegen: {0}")]
    Generate(#[from] GenerateError),
    #[error("serialize: {0}")]
    Serialize(#[from] SerializeError),
    #[error("ambiguous-shelf: {0:?} names {1} shelves; use an id")]
    AmbiguousShelf(String, usize),
    #[error("unknown-shelf: no shelf named or with id {0:?}")]
    UnknownShelf(String),
    #[error("invalid-workspace: {} problems", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error("serve: {0}")]
    Serve(std::io::Error),
}

type Out<'a> = &'a mut dyn Write;

/// Runs the program with `args` (including the program name) and returns
/// the process exit code.
pub fn run<I, T>(args: I, stdout: Out, stderr: Out) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if let CliError::Invalid(diags) = &e {
                for d in diags {
                    let _ = writeln!(stderr, "{d}");
                }
            }
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, bytes).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

fn load(path: &Path) -> Result<Workspace, CliError> {
    load_with(path, ParseOptions::default(), &mut std::io::sink())
}

fn load_with(path: &Path, options: ParseOptions, stderr: Out) -> Result<Workspace, CliError> {
    let bytes = read(path)?;
    let parsed = parse_workspace_with(&bytes, options).map_err(|err| CliError::Parse { path: path.to_owned(), err })?;
    for w in &parsed.warnings {
        let _ = writeln!(stderr, "warning: {}:{w}", path.display());
    }
    Ok(parsed.value)
}

/// Loads `path`, applies `edit`, and atomically rewrites the file. The file
/// is left untouched when any step fails.
fn mutate(path: &Path, stdout: Out, edit: impl FnOnce(&mut Workspace) -> Result<String, CliError>) -> Result<(), CliError> {
    let mut ws = load(path)?;
    let summary = edit(&mut ws)?;
    let errors: Vec<Diagnostic> = ws.validate().into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(CliError::Invalid(errors));
    }
    write(path, &serialize_workspace(&ws)?)?;
    let _ = writeln!(stdout, "{summary}");
    Ok(())
}

/// Resolves a shelf by exact id first, then by unique name.
fn resolve_shelf(ws: &Workspace, key: &str) -> Result<ShelfId, CliError> {
    let id = ShelfId::new(key);
    if ws.shelves().get(&id).is_some() {
        return Ok(id);
    }
    let named: Vec<&ShelfId> = ws.shelves().by_name(key).map(|s| &s.id).collect();
    match named.as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(CliError::UnknownShelf(key.to_owned())),
        many => Err(CliError::AmbiguousShelf(key.to_owned(), many.len())),
    }
}

fn status_line(s: &ShelfStatus) -> String {
    format!(
        "{} {:?} roots={} blocks={} visible={} collapsed={} active={}",
        s.shelf, s.name, s.member_roots, s.total_blocks, s.visible, s.collapse_state, s.active_state
    )
}

fn status_of(ws: &Workspace, id: &ShelfId) -> ShelfStatus {
    ws.shelf_box().into_iter().find(|s| &s.shelf == id).expect("resolved shelf has a status")
}

fn escape_line(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n").replace('\r', "\\r")
}

fn split_file(rest: Vec<String>) -> (Vec<BlockId>, PathBuf) {
    let mut rest = rest;
    let file = PathBuf::from(rest.pop().expect("clap enforces at least one value"));
    (rest.into_iter().map(BlockId::new).collect(), file)
}

fn execute(command: Command, stdout: Out, stderr: Out) -> Result<(), CliError> {
    match command {
        Command::Inspect { file } => {
            let ws = load(&file)?;
            let shelved = ws.top_level().iter().filter(|r| ws.shelf_of(r).is_some()).count();
            let _ = writeln!(stdout, "blocks: {}", ws.block_count());
            let _ = writeln!(stdout, "roots: {}", ws.top_level().len());
            let _ = writeln!(stdout, "visible_roots: {}", ws.visible_roots().len());
            let _ = writeln!(stdout, "shelved_roots: {shelved}");
            let _ = writeln!(stdout, "shelves: {}", ws.shelves().len());
            Ok(())
        }
        Command::Validate { file, lenient } => {
            let ws = load_with(&file, ParseOptions { lenient }, stderr)?;
            for d in ws.validate() {
                let _ = writeln!(stderr, "{d}");
            }
            let _ = writeln!(stdout, "ok: {} blocks, {} shelves", ws.block_count(), ws.shelves().len());
            Ok(())
        }
        Command::Fmt { file, write: in_place } => {
            let bytes = serialize_workspace(&load(&file)?)?;
            if in_place {
                if read(&file)? != bytes {
                    write(&file, &bytes)?;
                }
                let _ = writeln!(stdout, "formatted {}", file.display());
            } else {
                let _ = stdout.write_all(&bytes);
            }
            Ok(())
        }
        Command::Shelf { action } => shelf(action, stdout, stderr),
        Command::Comment { block, file, text } => mutate(&file, stdout, |ws| {
            let id = BlockId::new(block);
            let verb = if text.is_some() { "set" } else { "cleared" };
            ws.set_comment(&id, text)?;
            Ok(format!("{verb} comment on {id}"))
        }),
        Command::Search(args) => {
            let ws = load(&args.file)?;
            let shelf = args.shelf.as_deref().map(|s| resolve_shelf(&ws, s)).transpose()?;
            let query = Query { comment_substring: args.comment, block_type: args.block_type, field_value: args.field, shelf };
            let matches = search(&ws, &query)?;
            if args.json {
                let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&matches).expect("matches serialize"));
                return Ok(());
            }
            for m in matches {
                let name = m.shelf.as_ref().and_then(|s| ws.shelves().get(s)).map_or("-", |s| s.name.as_str());
                let _ = writeln!(
                    stdout,
                    "{}:{} shelf={} {}",
                    args.file.display(),
                    m.block,
                    escape_line(name),
                    escape_line(&m.snippet)
                );
            }
            Ok(())
        }
        Command::Stats { files, threshold, json } => {
            let projects = files.iter().map(|f| load(f)).collect::<Result<Vec<_>, _>>()?;
            let report = corpus_stats(&projects, threshold)?;
            if json {
                let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("report serializes"));
                return Ok(());
            }
            let counts: Vec<String> = report.counts.iter().map(ToString::to_string).collect();
            let _ = writeln!(stdout, "projects: {}", report.projects);
            let _ = writeln!(stdout, "threshold: {}", report.threshold);
            let _ = writeln!(stdout, "median: {}", report.median);
            let _ = writeln!(stdout, "fraction_over_threshold: {}", report.fraction_over_threshold);
            let _ = writeln!(stdout, "counts: {}", counts.join(" "));
            Ok(())
        }
        Command::Codegen { file, output } => {
            let program = generate(&load(&file)?)?;
            for w in &program.warnings {
                let _ = writeln!(stderr, "{w}");
            }
            match output {
                Some(out) => write(&out, program.text.as_bytes()),
                None => {
                    let _ = stdout.write_all(program.text.as_bytes());
                    Ok(())
                }
            }
        }
        Command::Serve { file, port, host } => serve(&file, &host, port, stderr),
    }
}

fn shelf(action: ShelfCommand, stdout: Out, stderr: Out) -> Result<(), CliError> {
    let toggle = |target: ShelfFile, stdout: Out, verb: &str, op: fn(&mut Workspace, &ShelfId) -> Result<(), EditError>| {
        mutate(&target.file, stdout, |ws| {
            let id = resolve_shelf(ws, &target.shelf)?;
            op(ws, &id)?;
            Ok(format!("{verb} {}", status_line(&status_of(ws, &id))))
        })
    };
    match action {
        ShelfCommand::Create { name, rest } => {
            let (roots, file) = split_file(rest);
            mutate(&file, stdout, |ws| {
                let id = ws.create_shelf(&name, &roots)?;
                Ok(format!("created {}", status_line(&status_of(ws, &id))))
            })
        }
        ShelfCommand::List { file } => {
            let ws = load(&file)?;
            for s in ws.shelf_box() {
                let _ = writeln!(stdout, "{}", status_line(&s));
            }
            Ok(())
        }
        ShelfCommand::Show(target) => {
            let ws = load(&target.file)?;
            let id = resolve_shelf(&ws, &target.shelf)?;
            let _ = writeln!(stdout, "{}", status_line(&status_of(&ws, &id)));
            for root in &ws.shelves().get(&id).expect("resolved").members {
                let block = ws.block(root).expect("members exist");
                let _ = writeln!(stdout, "  {root} {}", root_key(block));
            }
            Ok(())
        }
        ShelfCommand::Vis(t) => toggle(t, stdout, "shown", |ws, id| ws.set_shelf_visibility(id, true)),
        ShelfCommand::Hide(t) => toggle(t, stdout, "hidden", |ws, id| ws.set_shelf_visibility(id, false)),
        ShelfCommand::Min(t) => toggle(t, stdout, "minimized", Workspace::minimize_shelf),
        ShelfCommand::Max(t) => toggle(t, stdout, "maximized", Workspace::maximize_shelf),
        ShelfCommand::On(t) => toggle(t, stdout, "activated", Workspace::activate_shelf),
        ShelfCommand::Off(t) => toggle(t, stdout, "deactivated", Workspace::deactivate_shelf),
        ShelfCommand::Dup(t) => mutate(&t.file, stdout, |ws| {
            let id = resolve_shelf(ws, &t.shelf)?;
            let copy = ws.duplicate_shelf(&id, DEFAULT_DUPLICATE_OFFSET)?;
            Ok(format!("duplicated {id} as {}", status_line(&status_of(ws, &copy))))
        }),
        ShelfCommand::Assign(ShelfRoots { shelf, rest }) => {
            let (roots, file) = split_file(rest);
            mutate(&file, stdout, |ws| {
                let id = resolve_shelf(ws, &shelf)?;
                ws.assign_to_shelf(&id, &roots)?;
                Ok(format!("assigned {}", status_line(&status_of(ws, &id))))
            })
        }
        ShelfCommand::Unassign(ShelfRoots { shelf, rest }) => {
            let (roots, file) = split_file(rest);
            mutate(&file, stdout, |ws| {
                let id = resolve_shelf(ws, &shelf)?;
                ws.remove_from_shelf(&id, &roots)?;
                Ok(format!("unassigned {}", status_line(&status_of(ws, &id))))
            })
        }
        ShelfCommand::Export { file, shelf, output } => {
            let ws = load(&file)?;
            let id = resolve_shelf(&ws, &shelf)?;
            let bytes = serialize_shelf_export(&ws.export_shelf(&id)?)?;
            match output {
                Some(out) => {
                    write(&out, &bytes)?;
                    let _ = writeln!(stdout, "exported {id} to {}", out.display());
                }
                None => {
                    let _ = stdout.write_all(&bytes);
                }
            }
            Ok(())
        }
        ShelfCommand::Import { file, from, name_policy } => {
            let bytes = read(&from)?;
            let doc = parse_shelf_export(&bytes).map_err(|err| CliError::Parse { path: from.clone(), err })?;
            let mut warnings = Vec::new();
            mutate(&file, stdout, |ws| {
                let (id, report) = ws.import_shelf(&doc, name_policy)?;
                warnings = report.warnings;
                Ok(format!("imported {} ({} blocks)", status_line(&status_of(ws, &id)), report.id_remap.len()))
            })?;
            for w in warnings {
                let _ = writeln!(stderr, "{w}");
            }
            Ok(())
        }
    }
}

fn serve(file: &Path, host: &str, port: u16, stderr: Out) -> Result<(), CliError> {
    let ws = load(file)?;
    let no_color = std::env::var_os("BLOCKSHELF_NO_COLOR").is_some();
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_ansi(!no_color)
        .with_writer(std::io::stderr)
        .try_init();
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(CliError::Serve)?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await.map_err(CliError::Serve)?;
        let addr = listener.local_addr().map_err(CliError::Serve)?;
        let _ = writeln!(stderr, "serving {} on http://{addr}", file.display());
        let service = blockshelf_service::Service::start(ws, file);
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        blockshelf_service::serve(service, listener, shutdown).await.map_err(CliError::Serve)
    })
}
