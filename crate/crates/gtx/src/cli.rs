//! The `gtx` command line.
//!
//! Exit codes: 0 success, 1 grammar or graph problems (one `FILE:LINE:COL:
//! message` line each on stderr) or a failing suite, 2 I/O or usage errors,
//! 3 inapplicable rule, 4 truncated exploration.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gtx_core::explore::{explore, Limits};
use gtx_core::graph::HostGraph;
use gtx_core::matcher::Matcher;
use gtx_core::rewrite::apply_match;

use crate::dsl::serialize_graph;
use crate::grammar::{Diagnostic, GrammarDir, LoadError};
use crate::lts::export;
use crate::suite::{helloworld, run_suite_with, SuiteConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INAPPLICABLE: i32 = 3;
pub const EXIT_TRUNCATED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "gtx", version, about = "Graph transformation over simple labelled graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and check every file of a grammar directory.
    Validate { dir: PathBuf },
    /// Apply a rule once at its first match.
    Apply(ApplyArgs),
    /// Like `apply`, for rules that only read.
    Count(ApplyArgs),
    /// Explore the state space of all rules from the start graph.
    Explore {
        dir: PathBuf,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        max_states: u64,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        max_depth: u64,
    },
    /// Run the built-in Hello World fixture suite.
    Suite {
        #[arg(long, default_value_t = SuiteConfig::default().seed)]
        seed: u64,
        /// Random graphs per counting fixture.
        #[arg(long, default_value_t = SuiteConfig::default().random_cases)]
        cases: usize,
    },
}

#[derive(Debug, Args)]
struct ApplyArgs {
    dir: PathBuf,
    rule: String,
    /// Host graph to use instead of the start graph.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Write the resulting graph here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Apply at every root match of the input graph that is still a match
    /// when its turn comes.
    #[arg(long)]
    all_matches: bool,
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    color: bool,
}

impl Io<'_> {
    fn error(&mut self, msg: impl std::fmt::Display) -> std::io::Result<()> {
        if self.color {
            writeln!(self.err, "\x1b[1;31merror\x1b[0m: {msg}")
        } else {
            writeln!(self.err, "error: {msg}")
        }
    }

    fn diagnostics(&mut self, ds: &[Diagnostic]) -> std::io::Result<()> {
        for d in ds {
            if self.color {
                writeln!(self.err, "\x1b[1m{}:\x1b[0m \x1b[31m{}\x1b[0m", d.span, d.message)?;
            } else {
                writeln!(self.err, "{d}")?;
            }
        }
        Ok(())
    }

    fn load_failure(&mut self, e: LoadError) -> std::io::Result<i32> {
        match e {
            LoadError::Invalid(ds) => {
                self.diagnostics(&ds)?;
                Ok(EXIT_INVALID)
            }
            other => {
                self.error(other)?;
                Ok(EXIT_IO)
            }
        }
    }
}

/// Whether `GTX_COLOR` asks for coloured diagnostics.
pub fn color_from_env() -> bool {
    std::env::var("GTX_COLOR").is_ok_and(|v| v == "1")
}

/// Runs the command line `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = if color {
                e.render().ansi().to_string()
            } else {
                e.render().to_string()
            };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{text}");
            return if code == 0 { EXIT_OK } else { EXIT_IO };
        }
    };
    let mut io = Io { out, err, color };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(e) => {
            let _ = io.error(format!("write failed: {e}"));
            EXIT_IO
        }
    }
}

fn dispatch(cmd: Command, io: &mut Io<'_>) -> std::io::Result<i32> {
    match cmd {
        Command::Validate { dir } => match GrammarDir::load(&dir) {
            Ok(_) => Ok(EXIT_OK),
            Err(e) => io.load_failure(e),
        },
        Command::Apply(args) => apply(args, false, io),
        Command::Count(args) => apply(args, true, io),
        Command::Explore {
            dir,
            max_states,
            max_depth,
        } => {
            let g = match GrammarDir::load(&dir) {
                Ok(g) => g,
                Err(e) => return io.load_failure(e),
            };
            let rules: Vec<_> = g.rules().cloned().collect();
            let limits = Limits {
                max_states: usize::try_from(max_states).unwrap_or(usize::MAX),
                max_depth: usize::try_from(max_depth).unwrap_or(usize::MAX),
            };
            let lts = explore(&rules, g.start(), g.env(), limits);
            io.out.write_all(export(&lts).as_bytes())?;
            Ok(if lts.truncated { EXIT_TRUNCATED } else { EXIT_OK })
        }
        Command::Suite { seed, cases } => {
            let report = run_suite_with(
                &helloworld(),
                SuiteConfig {
                    seed,
                    random_cases: cases,
                },
            );
            write!(io.out, "{report}")?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_INVALID })
        }
    }
}

fn read_graph(g: &GrammarDir, path: &Path, io: &mut Io<'_>) -> std::io::Result<Result<HostGraph, i32>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            io.error(format!("{}: {e}", path.display()))?;
            return Ok(Err(EXIT_IO));
        }
    };
    match g.check_graph(&path.display().to_string(), &text) {
        Ok(h) => Ok(Ok(h)),
        Err(ds) => {
            io.diagnostics(&ds)?;
            Ok(Err(EXIT_INVALID))
        }
    }
}

fn apply(args: ApplyArgs, reader_only: bool, io: &mut Io<'_>) -> std::io::Result<i32> {
    let g = match GrammarDir::load(&args.dir) {
        Ok(g) => g,
        Err(e) => return io.load_failure(e),
    };
    let Some(rule) = g.rule(&args.rule) else {
        io.error(format!("no rule `{}` in {}", args.rule, args.dir.display()))?;
        return Ok(EXIT_IO);
    };
    if reader_only && !rule.is_reader_only() {
        io.error(format!("rule `{}` changes the graph; use `apply`", args.rule))?;
        return Ok(EXIT_IO);
    }
    let host = match &args.graph {
        Some(p) => match read_graph(&g, p, io)? {
            Ok(h) => h,
            Err(code) => return Ok(code),
        },
        None => g.start().clone(),
    };

    let env = g.env();
    let roots = Matcher::new(rule, &host, env).root_matches();
    let chosen: Vec<_> = if args.all_matches {
        roots
    } else {
        roots.into_iter().take(1).collect()
    };
    if chosen.is_empty() {
        io.error(format!("rule `{}` is not applicable", args.rule))?;
        return Ok(EXIT_INAPPLICABLE);
    }
    let mut graph = host;
    let mut output = String::new();
    for (i, m) in chosen.iter().enumerate() {
        // later matches may have been invalidated by earlier applications
        if i > 0 && !Matcher::new(rule, &graph, env).root_matches().contains(m) {
            continue;
        }
        match apply_match(rule, &graph, env, m) {
            Ok(res) => {
                output.push_str(&res.output);
                graph = res.graph;
            }
            Err(e) => {
                io.error(format!("rule `{}`: {e}", args.rule))?;
                return Ok(EXIT_INVALID);
            }
        }
    }

    io.out.write_all(output.as_bytes())?;
    let text = serialize_graph(&graph);
    match &args.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                io.error(format!("{}: {e}", p.display()))?;
                return Ok(EXIT_IO);
            }
        }
        None => {
            io.out.write_all(b"---\n")?;
            io.out.write_all(text.as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}
