//! Grammar directories: type graphs, rules and a start graph loaded and
//! validated as one unit.
//!
//! A directory holds any number of `.gty`, `.gpr` and `.gst` files and an
//! optional `grammar.conf` with `KEY = VALUE` lines:
//!
//! ```text
//! start = start.gst
//! typegraph = Source.gty
//! ```
//!
//! Without `typegraph` lines every type graph is enabled. Without `start`,
//! `start.gst` is used if present, otherwise an empty graph.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use gtx_core::graph::HostGraph;
use gtx_core::rule::{validate_rule, Rule};
use gtx_core::types::{conforms, validate_type_graph, TypeEnv, TypeGraph};
use gtx_core::violation::Violation;
use thiserror::Error;

use crate::dsl::{parse_graph_source, parse_rule_source, parse_type_graph_source, ParseError, Parsed, SourceSpan};

pub const CONFIG_FILE: &str = "grammar.conf";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

impl From<ParseError> for Diagnostic {
    fn from(e: ParseError) -> Self {
        Diagnostic {
            span: e.span,
            message: e.message,
        }
    }
}

fn diagnose<T>(parsed: &Parsed<T>, vs: Vec<Violation>) -> impl Iterator<Item = Diagnostic> + '_ {
    vs.into_iter().map(|v| Diagnostic {
        span: parsed.spans.locate(&v.location).clone(),
        message: v.message,
    })
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}: no such file in the grammar")]
    Missing(String),
    #[error("{} problem(s) found", .0.len())]
    Invalid(Vec<Diagnostic>),
}

#[derive(Debug, Clone)]
pub struct GrammarDir {
    path: Option<PathBuf>,
    sources: BTreeMap<String, String>,
    loaded: Vec<TypeGraph>,
    enabled: Vec<TypeGraph>,
    rules: BTreeMap<String, Rule>,
    start: HostGraph,
}

struct Config {
    start: Option<String>,
    type_graphs: Vec<String>,
}

fn parse_config(text: &str) -> Result<Config, Vec<Diagnostic>> {
    let mut cfg = Config {
        start: None,
        type_graphs: Vec::new(),
    };
    let mut errs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let col = raw.len() - raw.trim_start().len() + 1;
        let span = SourceSpan {
            file: CONFIG_FILE.into(),
            line: i + 1,
            cols: col..line.trim_end().len() + 1,
        };
        let Some((k, v)) = line.split_once('=') else {
            errs.push(Diagnostic {
                span,
                message: "expected `KEY = VALUE`".into(),
            });
            continue;
        };
        let v = v.trim().to_string();
        match k.trim() {
            "start" if cfg.start.is_none() => cfg.start = Some(v),
            "start" => errs.push(Diagnostic {
                span,
                message: "second `start` line".into(),
            }),
            "typegraph" => cfg.type_graphs.push(v),
            other => errs.push(Diagnostic {
                span,
                message: format!("unknown key `{other}`"),
            }),
        }
    }
    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(errs)
    }
}

fn has_ext(name: &str, ext: &str) -> bool {
    Path::new(name).extension().is_some_and(|e| e == ext)
}

impl GrammarDir {
    /// Reads every grammar file in `dir`.
    pub fn load(dir: &Path) -> Result<Self, LoadError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| LoadError::Io { path, source }
        };
        let mut sources = BTreeMap::new();
        for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
            let entry = entry.map_err(io_err(dir))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if name == CONFIG_FILE || ["gst", "gty", "gpr"].iter().any(|e| has_ext(&name, e)) {
                let path = entry.path();
                let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
                sources.insert(name, text);
            }
        }
        let mut g = Self::from_sources(sources)?;
        g.path = Some(dir.to_path_buf());
        Ok(g)
    }

    /// Builds a grammar from `(file name, text)` pairs.
    pub fn from_sources<I, K, V>(files: I) -> Result<Self, LoadError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let sources: BTreeMap<String, String> = files.into_iter().map(|(k, v)| (k.into(), v.into())).collect();
        let mut diags = Vec::new();

        let cfg = match sources.get(CONFIG_FILE).map(|t| parse_config(t)) {
            None => Config {
                start: None,
                type_graphs: Vec::new(),
            },
            Some(Ok(c)) => c,
            Some(Err(d)) => return Err(LoadError::Invalid(d)),
        };
        for f in cfg.start.iter().chain(&cfg.type_graphs) {
            if !sources.contains_key(f) {
                return Err(LoadError::Missing(f.clone()));
            }
        }

        let mut type_graphs = Vec::new();
        let mut enabled = Vec::new();
        let mut tg_names: BTreeMap<String, String> = BTreeMap::new();
        for (file, text) in sources.iter().filter(|(f, _)| has_ext(f, "gty")) {
            match parse_type_graph_source(file, text) {
                Err(e) => diags.push(e.into()),
                Ok(p) => {
                    diags.extend(diagnose(&p, validate_type_graph(&p.value)));
                    if let Some(prev) = tg_names.insert(p.value.name().into(), file.clone()) {
                        diags.push(Diagnostic {
                            span: p.spans.header().clone(),
                            message: format!("type graph `{}` is also defined in {prev}", p.value.name()),
                        });
                    }
                    if cfg.type_graphs.is_empty() || cfg.type_graphs.contains(file) {
                        enabled.push(p.value.clone());
                    }
                    type_graphs.push(p.value);
                }
            }
        }

        let mut rules = BTreeMap::new();
        let mut rule_files: BTreeMap<String, String> = BTreeMap::new();
        for (file, text) in sources.iter().filter(|(f, _)| has_ext(f, "gpr")) {
            match parse_rule_source(file, text) {
                Err(e) => diags.push(e.into()),
                Ok(p) => {
                    diags.extend(diagnose(&p, validate_rule(&p.value, Some(&enabled))));
                    let name = p.value.name().to_string();
                    if let Some(prev) = rule_files.insert(name.clone(), file.clone()) {
                        diags.push(Diagnostic {
                            span: p.spans.header().clone(),
                            message: format!("rule `{name}` is also defined in {prev}"),
                        });
                    }
                    rules.insert(name, p.value);
                }
            }
        }

        let start_file = cfg
            .start
            .clone()
            .or_else(|| sources.contains_key("start.gst").then(|| "start.gst".to_string()));
        let mut start = HostGraph::new("start");
        for (file, text) in sources.iter().filter(|(f, _)| has_ext(f, "gst")) {
            match parse_graph_source(file, text) {
                Err(e) => diags.push(e.into()),
                Ok(p) => {
                    if start_file.as_ref() == Some(file) {
                        diags.extend(diagnose(&p, conforms(&enabled, &p.value)));
                        start = p.value;
                    }
                }
            }
        }

        if !diags.is_empty() {
            diags.sort();
            diags.dedup();
            return Err(LoadError::Invalid(diags));
        }
        Ok(GrammarDir {
            path: None,
            sources,
            loaded: type_graphs,
            enabled,
            rules,
            start,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn sources(&self) -> &BTreeMap<String, String> {
        &self.sources
    }

    /// The same grammar with one file replaced or added.
    pub fn with_source(&self, file: &str, text: &str) -> Result<Self, LoadError> {
        let mut sources = self.sources.clone();
        sources.insert(file.into(), text.into());
        let mut g = Self::from_sources(sources)?;
        g.path = self.path.clone();
        Ok(g)
    }

    /// Enabled type graphs.
    pub fn type_graphs(&self) -> &[TypeGraph] {
        &self.enabled
    }

    /// Any loaded type graph, enabled or not, by name.
    pub fn type_graph(&self, name: &str) -> Option<&TypeGraph> {
        self.loaded.iter().find(|t| t.name() == name)
    }

    pub fn env(&self) -> TypeEnv<'_> {
        TypeEnv::new(&self.enabled)
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rules.get(name)
    }

    /// Rules ordered by name.
    pub fn rules(&self) -> impl Iterator<Item = &Rule> + '_ {
        self.rules.values()
    }

    pub fn start(&self) -> &HostGraph {
        &self.start
    }

    /// Parses a host graph and checks it against the enabled type graphs.
    pub fn check_graph(&self, file: &str, text: &str) -> Result<HostGraph, Vec<Diagnostic>> {
        let p = parse_graph_source(file, text).map_err(|e| vec![Diagnostic::from(e)])?;
        let mut diags: Vec<Diagnostic> = diagnose(&p, conforms(&self.enabled, &p.value)).collect();
        if diags.is_empty() {
            Ok(p.value)
        } else {
            diags.sort();
            Err(diags)
        }
    }
}
