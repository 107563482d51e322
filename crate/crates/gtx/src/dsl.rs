//! Line-oriented text format for host graphs (`.gst`), type graphs (`.gty`)
//! and rules (`.gpr`).
//!
//! Every file starts with a header line (`graph NAME`, `typegraph NAME` or
//! `rule NAME`) followed by one declaration per line. `#` starts a comment.
//! Names may be used before the line that declares them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use gtx_core::graph::{HostGraph, NodeId};
use gtx_core::label::{check_name, Label, Value, ValueType};
use gtx_core::rule::{AttrOp, Direction, PathAtom, QuantId, QuantKind, RegexPath, Role, Rule, RuleBuilder, RuleNodeId};
use gtx_core::types::{EdgeDecl, TypeDecl, TypeGraph};
use gtx_core::violation::Location;
use thiserror::Error;

/// A position in a source file. Lines and columns are 1-based; `cols` is a
/// half-open range of character columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub cols: Range<usize>,
}

impl SourceSpan {
    fn key(&self) -> (&str, usize, usize, usize) {
        (&self.file, self.line, self.cols.start, self.cols.end)
    }
}

impl PartialOrd for SourceSpan {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SourceSpan {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.cols.start)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

/// Source positions of the elements of a parsed file, keyed like
/// [`Violation`](gtx_core::Violation) locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanMap {
    header: SourceSpan,
    map: BTreeMap<Location, SourceSpan>,
}

impl SpanMap {
    pub fn header(&self) -> &SourceSpan {
        &self.header
    }

    /// The span of `loc`, or the header line if the element has none.
    pub fn locate(&self, loc: &Location) -> &SourceSpan {
        match loc {
            Location::NodeAttr(n, _) => self.map.get(loc).or_else(|| self.map.get(&Location::Node(*n))),
            Location::TypeAttr(t, _) => self.map.get(loc).or_else(|| self.map.get(&Location::Type(t.clone()))),
            _ => self.map.get(loc),
        }
        .unwrap_or(&self.header)
    }

    fn insert(&mut self, loc: Location, span: SourceSpan) {
        self.map.entry(loc).or_insert(span);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed<T> {
    pub value: T,
    pub spans: SpanMap,
}

#[derive(Debug, Clone)]
struct Tok {
    text: String,
    quoted: bool,
    cols: Range<usize>,
}

struct Line<'a> {
    file: &'a str,
    line: usize,
    width: usize,
    toks: Vec<Tok>,
    pos: usize,
}

fn tokenize<'a>(file: &'a str, line: usize, text: &str) -> Result<Line<'a>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let err = |cols: Range<usize>, message: &str| ParseError {
        span: SourceSpan {
            file: file.into(),
            line,
            cols,
        },
        message: message.into(),
    };
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '#' {
            break;
        } else if c == '"' {
            let start = i;
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(err(start + 1..i + 1, "unterminated string")),
                    Some('"') => break,
                    Some('\\') => {
                        match chars.get(i + 1) {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            _ => return Err(err(i + 1..i + 3, "unknown escape")),
                        }
                        i += 2;
                    }
                    Some(&c) => {
                        s.push(c);
                        i += 1;
                    }
                }
            }
            i += 1;
            toks.push(Tok {
                text: s,
                quoted: true,
                cols: start + 1..i + 1,
            });
        } else if c == ':' || c == ',' {
            toks.push(Tok {
                text: c.into(),
                quoted: false,
                cols: i + 1..i + 2,
            });
            i += 1;
        } else {
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() && !matches!(chars[i], '#' | '"' | ':' | ',') {
                i += 1;
            }
            toks.push(Tok {
                text: chars[start..i].iter().collect(),
                quoted: false,
                cols: start + 1..i + 1,
            });
        }
    }
    Ok(Line {
        file,
        line,
        width: chars.len(),
        toks,
        pos: 0,
    })
}

impl<'a> Line<'a> {
    fn span(&self, cols: Range<usize>) -> SourceSpan {
        SourceSpan {
            file: self.file.into(),
            line: self.line,
            cols,
        }
    }

    fn whole(&self) -> SourceSpan {
        let start = self.toks.first().map_or(1, |t| t.cols.start);
        self.span(start..self.width.max(start) + 1)
    }

    fn err_at(&self, tok: &Tok, message: impl Into<String>) -> ParseError {
        ParseError {
            span: self.span(tok.cols.clone()),
            message: message.into(),
        }
    }

    fn err_end(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            span: self.span(self.width + 1..self.width + 2),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self, what: &str) -> Result<Tok, ParseError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(self.err_end(format!("expected {what}"))),
        }
    }

    fn word(&mut self, what: &str) -> Result<Tok, ParseError> {
        let t = self.next(what)?;
        if t.quoted {
            return Err(self.err_at(&t, format!("expected {what}, found a string")));
        }
        Ok(t)
    }

    fn keyword(&mut self, kw: &str) -> Result<Tok, ParseError> {
        let t = self.word(&format!("`{kw}`"))?;
        if t.text != kw {
            return Err(self.err_at(&t, format!("expected `{kw}`, found `{}`", t.text)));
        }
        Ok(t)
    }

    fn eat(&mut self, kw: &str) -> bool {
        match self.peek() {
            Some(t) if !t.quoted && t.text == kw => {
                self.pos += 1;
                true
            }
            _ => false,
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, Tok), ParseError> {
        let t = self.word(what)?;
        check_name(&t.text).map_err(|e| self.err_at(&t, e.to_string()))?;
        Ok((t.text.clone(), t))
    }

    /// `ID.NAME`
    fn dotted(&mut self, what: &str) -> Result<(String, String, Tok), ParseError> {
        let t = self.word(what)?;
        let Some((a, b)) = t.text.split_once('.') else {
            return Err(self.err_at(&t, format!("expected {what} of the form `ID.NAME`")));
        };
        for part in [a, b] {
            check_name(part).map_err(|e| self.err_at(&t, e.to_string()))?;
        }
        Ok((a.into(), b.into(), t))
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        let t = self.next("a value")?;
        parse_value(&t).map_err(|m| self.err_at(&t, m))
    }

    /// `-LABEL->`
    fn arrow(&mut self) -> Result<(String, Tok), ParseError> {
        let t = self.word("an edge `-LABEL->`")?;
        let Some(label) = t.text.strip_prefix('-').and_then(|s| s.strip_suffix("->")) else {
            return Err(self.err_at(&t, "expected an edge of the form `-LABEL->`"));
        };
        check_name(label).map_err(|e| self.err_at(&t, e.to_string()))?;
        Ok((label.into(), t))
    }

    fn done(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err_at(t, format!("unexpected `{}`", t.text))),
        }
    }
}

fn parse_value(t: &Tok) -> Result<Value, String> {
    if t.quoted {
        return Ok(Value::Str(t.text.clone()));
    }
    match t.text.as_str() {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        "NaN" | "inf" | "-inf" => return Ok(Value::Real(t.text.parse().expect("special real"))),
        _ => {}
    }
    let digits = t.text.strip_prefix('-').unwrap_or(&t.text);
    if !digits.starts_with(|c: char| c.is_ascii_digit()) {
        return Err(format!("`{}` is not a value", t.text));
    }
    if t.text.contains('.') {
        t.text
            .parse::<f64>()
            .map(Value::Real)
            .map_err(|_| format!("bad real `{}`", t.text))
    } else {
        t.text
            .parse::<i64>()
            .map(Value::Int)
            .map_err(|_| format!("bad int `{}`", t.text))
    }
}

/// Non-empty lines of `text`, tokenized.
fn lines<'a>(file: &'a str, text: &str) -> Result<Vec<Line<'a>>, ParseError> {
    let mut out = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let line = tokenize(file, i + 1, l)?;
        if !line.toks.is_empty() {
            out.push(line);
        }
    }
    Ok(out)
}

fn header<'a>(file: &'a str, lines: &mut Vec<Line<'a>>, kw: &str) -> Result<(String, SourceSpan), ParseError> {
    if lines.is_empty() {
        return Err(ParseError {
            span: SourceSpan {
                file: file.into(),
                line: 1,
                cols: 1..2,
            },
            message: format!("expected `{kw} NAME`"),
        });
    }
    let mut h = lines.remove(0);
    h.keyword(kw)?;
    let (name, _) = h.name("a name")?;
    h.done()?;
    Ok((name, h.whole()))
}

fn new_spans(header: SourceSpan) -> SpanMap {
    SpanMap {
        header,
        map: BTreeMap::new(),
    }
}

pub fn parse_graph(text: &str) -> Result<HostGraph, ParseError> {
    parse_graph_source("<input>", text).map(|p| p.value)
}

pub fn parse_graph_source(file: &str, text: &str) -> Result<Parsed<HostGraph>, ParseError> {
    let mut lines = lines(file, text)?;
    let (name, head) = header(file, &mut lines, "graph")?;
    let mut g = HostGraph::new(name);
    let mut spans = new_spans(head);
    let mut ids: BTreeMap<String, NodeId> = BTreeMap::new();
    let mut rest = Vec::new();

    for mut l in lines {
        let kw = l.word("a declaration")?;
        if kw.text != "node" {
            rest.push((kw, l));
            continue;
        }
        let (id, tok) = l.name("a node name")?;
        if ids.contains_key(&id) {
            return Err(l.err_at(&tok, format!("node `{id}` is declared twice")));
        }
        let mut types = Vec::new();
        if l.eat(":") {
            loop {
                let (t, tt) = l.name("a node type")?;
                types.push(Label::node_type(t).map_err(|e| l.err_at(&tt, e.to_string()))?);
                if !l.eat(",") {
                    break;
                }
            }
        }
        let mut flags = Vec::new();
        while l.eat("flag") {
            let (f, ft) = l.name("a flag")?;
            flags.push(Label::flag(f).map_err(|e| l.err_at(&ft, e.to_string()))?);
        }
        l.done()?;
        let n = g.add_node(&types, &flags).map_err(|e| l.err_at(&tok, e.to_string()))?;
        g.set_node_name(n, &id).map_err(|e| l.err_at(&tok, e.to_string()))?;
        ids.insert(id, n);
        spans.insert(Location::Node(n), l.whole());
    }

    let lookup = |l: &Line<'_>, name: &str, tok: &Tok| {
        ids.get(name)
            .copied()
            .ok_or_else(|| l.err_at(tok, format!("unknown node `{name}`")))
    };
    for (kw, mut l) in rest {
        match kw.text.as_str() {
            "attr" => {
                let (id, attr, tok) = l.dotted("an attribute")?;
                let n = lookup(&l, &id, &tok)?;
                l.keyword("=")?;
                let v = l.value()?;
                l.done()?;
                if g.attr(n, &attr).is_some() {
                    return Err(l.err_at(&tok, format!("attribute `{id}.{attr}` is set twice")));
                }
                g.set_attr(n, &attr, v).map_err(|e| l.err_at(&tok, e.to_string()))?;
                spans.insert(Location::NodeAttr(n, attr), l.whole());
            }
            "edge" => {
                let (s, st) = l.name("a source node")?;
                let (label, lt) = l.arrow()?;
                let (t, tt) = l.name("a target node")?;
                l.done()?;
                let (s, t) = (lookup(&l, &s, &st)?, lookup(&l, &t, &tt)?);
                let lbl = Label::edge(&label).map_err(|e| l.err_at(&lt, e.to_string()))?;
                if !g.add_edge(s, &lbl, t).map_err(|e| l.err_at(&lt, e.to_string()))? {
                    return Err(l.err_at(&lt, "duplicate edge"));
                }
                spans.insert(Location::Edge(s, label, t), l.whole());
            }
            other => return Err(l.err_at(&kw, format!("unknown graph declaration `{other}`"))),
        }
    }
    Ok(Parsed { value: g, spans })
}

pub fn parse_type_graph(text: &str) -> Result<TypeGraph, ParseError> {
    parse_type_graph_source("<input>", text).map(|p| p.value)
}

fn parse_value_type(l: &Line<'_>, t: &Tok) -> Result<ValueType, ParseError> {
    Ok(match t.text.as_str() {
        "string" => ValueType::String,
        "int" => ValueType::Int,
        "bool" => ValueType::Bool,
        "real" => ValueType::Real,
        other => return Err(l.err_at(t, format!("unknown attribute type `{other}`"))),
    })
}

pub fn parse_type_graph_source(file: &str, text: &str) -> Result<Parsed<TypeGraph>, ParseError> {
    let mut lines = lines(file, text)?;
    let (name, head) = header(file, &mut lines, "typegraph")?;
    let mut spans = new_spans(head);
    let mut decls: BTreeMap<String, TypeDecl> = BTreeMap::new();
    let mut order = Vec::new();
    let mut rest = Vec::new();

    for mut l in lines {
        let kw = l.word("a declaration")?;
        if kw.text != "type" {
            rest.push((kw, l));
            continue;
        }
        let (ty, tok) = l.name("a type name")?;
        if decls.contains_key(&ty) {
            return Err(l.err_at(&tok, format!("type `{ty}` is declared twice")));
        }
        let mut decl = TypeDecl::new(&ty);
        if l.eat("abstract") {
            decl = decl.abstract_type();
        }
        if l.eat("extends") {
            loop {
                let (sup, _) = l.name("a supertype")?;
                decl = decl.extends(sup);
                if !l.eat(",") {
                    break;
                }
            }
        }
        l.done()?;
        spans.insert(Location::Type(ty.clone()), l.whole());
        order.push(ty.clone());
        decls.insert(ty, decl);
    }

    let mut edges = Vec::new();
    for (kw, mut l) in rest {
        match kw.text.as_str() {
            "attr" => {
                let (ty, attr, tok) = l.dotted("an attribute")?;
                l.keyword(":")?;
                let vt = l.word("an attribute type")?;
                let vt = parse_value_type(&l, &vt)?;
                l.done()?;
                let Some(decl) = decls.get_mut(&ty) else {
                    return Err(l.err_at(&tok, format!("unknown type `{ty}`")));
                };
                if decl.attrs.insert(attr.clone(), vt).is_some() {
                    return Err(l.err_at(&tok, format!("attribute `{ty}.{attr}` is declared twice")));
                }
                spans.insert(Location::TypeAttr(ty, attr), l.whole());
            }
            "edge" => {
                let (s, _) = l.name("a source type")?;
                let (label, _) = l.arrow()?;
                let (t, _) = l.name("a target type")?;
                l.done()?;
                spans.insert(Location::TypeEdge(edges.len()), l.whole());
                edges.push(EdgeDecl::new(s, label, t));
            }
            other => return Err(l.err_at(&kw, format!("unknown type graph declaration `{other}`"))),
        }
    }

    let mut tg = TypeGraph::new(name);
    for ty in order {
        tg.declare(decls.remove(&ty).expect("declared"));
    }
    for e in edges {
        tg.declare_edge(e);
    }
    Ok(Parsed { value: tg, spans })
}

pub fn parse_regex(text: &str) -> Result<RegexPath, String> {
    let mut atoms = Vec::new();
    for part in text.split('.') {
        let (direction, label) = match part.strip_prefix('-') {
            Some(l) => (Direction::Inverse, l),
            None => (Direction::Forward, part),
        };
        if label.is_empty() {
            return Err(format!("empty atom in path `{text}`"));
        }
        check_name(label).map_err(|e| e.to_string())?;
        atoms.push(PathAtom {
            label: label.into(),
            direction,
        });
    }
    RegexPath::new(atoms).map_err(|e| e.to_string())
}

fn parse_role(l: &Line<'_>, t: &Tok, text: &str) -> Result<Role, ParseError> {
    Ok(match text {
        "reader" => Role::Reader,
        "eraser" => Role::Eraser,
        "creator" => Role::Creator,
        "embargo" => Role::Embargo,
        other => return Err(l.err_at(t, format!("unknown role `{other}`"))),
    })
}

fn role_opt(l: &mut Line<'_>) -> Result<Role, ParseError> {
    let t = l.word("`role=ROLE`")?;
    let Some(r) = t.text.strip_prefix("role=") else {
        return Err(l.err_at(&t, "expected `role=ROLE`"));
    };
    parse_role(l, &t, r)
}

fn param_index(l: &Line<'_>, t: &Tok) -> Result<u32, ParseError> {
    t.text
        .parse()
        .map_err(|_| l.err_at(t, format!("`{}` is not a parameter index", t.text)))
}

pub fn parse_rule(text: &str) -> Result<Rule, ParseError> {
    parse_rule_source("<input>", text).map(|p| p.value)
}

pub fn parse_rule_source(file: &str, text: &str) -> Result<Parsed<Rule>, ParseError> {
    let mut lines = lines(file, text)?;
    let (name, head) = header(file, &mut lines, "rule")?;
    let mut b = RuleBuilder::new(name);
    let mut spans = new_spans(head);

    // quantifiers and nodes first, so other lines may refer to them freely
    let mut quants: BTreeMap<String, QuantId> = BTreeMap::from([("root".to_string(), QuantId::ROOT)]);
    let mut parents = Vec::new();
    let mut node_lines = Vec::new();
    let mut rest = Vec::new();
    for mut l in lines {
        let kw = l.word("a declaration")?;
        match kw.text.as_str() {
            "quant" => {
                let (q, tok) = l.name("a quantifier name")?;
                if quants.contains_key(&q) {
                    return Err(l.err_at(&tok, format!("quantifier `{q}` is declared twice")));
                }
                let kt = l.word("`forall`, `forallx` or `exists`")?;
                let kind = match kt.text.as_str() {
                    "forall" => QuantKind::Forall,
                    "forallx" => QuantKind::ForallNonEmpty,
                    "exists" => QuantKind::Exists,
                    other => return Err(l.err_at(&kt, format!("unknown quantifier kind `{other}`"))),
                };
                let id = b.quant(&q, kind, QuantId::ROOT);
                quants.insert(q, id);
                let mut parent = None;
                let mut count = None;
                loop {
                    if l.eat("in") {
                        let (p, pt) = l.name("a quantifier")?;
                        parent = Some((p, pt));
                    } else if l.eat("count") {
                        let t = l.word("a parameter index")?;
                        count = Some(param_index(&l, &t)?);
                    } else {
                        break;
                    }
                }
                l.done()?;
                if let Some(p) = count {
                    b.count(id, p);
                    spans.insert(Location::Param(p), l.whole());
                }
                spans.insert(Location::Quantifier(id), l.whole());
                parents.push((id, parent, l));
            }
            "node" => node_lines.push(l),
            _ => rest.push((kw, l)),
        }
    }
    for (id, parent, l) in &parents {
        if let Some((p, pt)) = parent {
            let Some(&pid) = quants.get(p) else {
                return Err(l.err_at(pt, format!("unknown quantifier `{p}`")));
            };
            b.set_parent(*id, Some(pid));
        }
    }
    let level = |l: &mut Line<'_>| -> Result<Option<QuantId>, ParseError> {
        if !l.eat("in") {
            return Ok(None);
        }
        let (q, t) = l.name("a quantifier")?;
        quants
            .get(&q)
            .copied()
            .map(Some)
            .ok_or_else(|| l.err_at(&t, format!("unknown quantifier `{q}`")))
    };

    let mut nodes: BTreeMap<String, RuleNodeId> = BTreeMap::new();
    for mut l in node_lines {
        let (n, tok) = l.name("a node name")?;
        if nodes.contains_key(&n) {
            return Err(l.err_at(&tok, format!("node `{n}` is declared twice")));
        }
        let role = role_opt(&mut l)?;
        let mut ty = None;
        let mut q = None;
        loop {
            if l.eat(":") {
                ty = Some(l.name("a node type")?.0);
            } else if let Some(lv) = level(&mut l)? {
                q = Some(lv);
            } else {
                break;
            }
        }
        l.done()?;
        let id = b.node(&n, role, ty.as_deref(), q.unwrap_or(QuantId::ROOT));
        spans.insert(Location::RuleNode(id), l.whole());
        nodes.insert(n, id);
    }
    let node = |l: &mut Line<'_>, what: &str| -> Result<RuleNodeId, ParseError> {
        let (n, t) = l.name(what)?;
        nodes
            .get(&n)
            .copied()
            .ok_or_else(|| l.err_at(&t, format!("unknown node `{n}`")))
    };
    let dotted_node = |l: &mut Line<'_>| -> Result<(RuleNodeId, String), ParseError> {
        let (n, attr, t) = l.dotted("an attribute")?;
        let id = nodes
            .get(&n)
            .copied()
            .ok_or_else(|| l.err_at(&t, format!("unknown node `{n}`")))?;
        Ok((id, attr))
    };

    let mut has_format = false;
    let mut bound = BTreeSet::new();
    let mut disjoin_count = 0;
    let mut group_spans: BTreeMap<String, SourceSpan> = BTreeMap::new();
    for (kw, mut l) in rest {
        match kw.text.as_str() {
            "format" => {
                let t = l.next("a format string")?;
                if !t.quoted {
                    return Err(l.err_at(&t, "expected a quoted format string"));
                }
                l.done()?;
                if has_format {
                    return Err(l.err_at(&kw, "second format line"));
                }
                has_format = true;
                b.format(t.text);
                spans.insert(Location::Format, l.whole());
            }
            "edge" | "path" => {
                let src = node(&mut l, "a source node")?;
                let path = if kw.text == "edge" {
                    None
                } else {
                    let t = l.word("a path `~REGEX~>`")?;
                    let Some(re) = t.text.strip_prefix('~').and_then(|s| s.strip_suffix("~>")) else {
                        return Err(l.err_at(&t, "expected a path of the form `~REGEX~>`"));
                    };
                    Some((parse_regex(re).map_err(|m| l.err_at(&t, m))?, t))
                };
                let label = match path {
                    None => Some(l.arrow()?.0),
                    Some(_) => None,
                };
                let tgt = node(&mut l, "a target node")?;
                let rt = l.peek().cloned();
                let role = role_opt(&mut l)?;
                let mut q = None;
                let mut group = None;
                loop {
                    if let Some(lv) = level(&mut l)? {
                        q = Some(lv);
                    } else if l.eat("group") {
                        group = Some(l.name("a group name")?.0);
                    } else {
                        break;
                    }
                }
                l.done()?;
                let q = q.unwrap_or(QuantId::ROOT);
                let idx = match (label, path) {
                    (Some(label), _) => b.edge(src, &label, tgt, role, q),
                    (None, Some((path, pt))) => {
                        if !matches!(role, Role::Reader | Role::Embargo) {
                            let t = rt.unwrap_or(pt);
                            return Err(l.err_at(&t, format!("a path cannot be a {role} edge")));
                        }
                        b.path(src, path, tgt, role, q)
                    }
                    (None, None) => unreachable!("edge lines carry a label or a path"),
                };
                if let Some(g) = group {
                    group_spans.entry(g.clone()).or_insert_with(|| l.whole());
                    b.group(idx, g);
                }
                spans.insert(Location::RuleEdge(idx), l.whole());
            }
            "flag" => {
                let n = node(&mut l, "a node")?;
                let rt = l.word("a role")?;
                let role = parse_role(&l, &rt, &rt.text)?;
                let (f, _) = l.name("a flag")?;
                l.done()?;
                b.flag(n, role, f);
            }
            "match" => {
                let (n, attr) = dotted_node(&mut l)?;
                l.keyword("==")?;
                let v = l.value()?;
                l.done()?;
                b.attr(n, attr, AttrOp::Match(v));
            }
            "assign" => {
                let (n, attr) = dotted_node(&mut l)?;
                l.keyword("=")?;
                let op = match l.peek() {
                    Some(t) if !t.quoted && t.text.contains('.') && parse_value(t).is_err() => {
                        let (from, fattr) = dotted_node(&mut l)?;
                        AttrOp::Copy { from, attr: fattr }
                    }
                    _ => AttrOp::Assign(l.value()?),
                };
                l.done()?;
                b.attr(n, attr, op);
            }
            "drop" => {
                let (n, attr) = dotted_node(&mut l)?;
                l.done()?;
                b.attr(n, attr, AttrOp::Drop);
            }
            "bind" => {
                let t = l.word("a parameter index")?;
                let p = param_index(&l, &t)?;
                l.keyword("=")?;
                let (n, attr) = dotted_node(&mut l)?;
                l.done()?;
                if !bound.insert(p) {
                    return Err(l.err_at(&t, format!("parameter {p} is bound twice")));
                }
                b.bind(p, n, attr);
                spans.insert(Location::Param(p), l.whole());
            }
            "neq" => {
                let mut ids = vec![node(&mut l, "a node")?, node(&mut l, "a node")?];
                while l.peek().is_some() {
                    ids.push(node(&mut l, "a node")?);
                }
                b.neq(&ids);
            }
            "disjoin" => {
                let mut groups = vec![l.name("a group")?.0, l.name("a group")?.0];
                while l.peek().is_some() {
                    groups.push(l.name("a group")?.0);
                }
                spans.insert(Location::Disjunction(disjoin_count), l.whole());
                disjoin_count += 1;
                b.disjoin(&groups);
            }
            other => return Err(l.err_at(&kw, format!("unknown rule declaration `{other}`"))),
        }
    }

    let rule = b.build().map_err(|e| ParseError {
        span: match &e {
            gtx_core::rule::RuleError::UnknownGroup(g) => spans
                .map
                .get(&Location::Disjunction(0))
                .filter(|_| !group_spans.contains_key(g))
                .cloned()
                .unwrap_or_else(|| spans.header.clone()),
            gtx_core::rule::RuleError::GroupConflict(gs) => gs
                .iter()
                .filter_map(|g| group_spans.get(g))
                .max()
                .cloned()
                .unwrap_or_else(|| spans.header.clone()),
            _ => spans.header.clone(),
        },
        message: e.to_string(),
    })?;
    for (i, g) in rule.nac_groups().iter().enumerate() {
        let first = g
            .edges
            .iter()
            .map(|&e| Location::RuleEdge(e))
            .chain(g.nodes.iter().map(|&n| Location::RuleNode(n)))
            .find_map(|loc| spans.map.get(&loc).cloned());
        if let Some(span) = first {
            spans.insert(Location::Group(i), span);
        }
    }
    Ok(Parsed { value: rule, spans })
}

/// Quoted form of a string value.
fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Value literal as accepted by the parser.
pub fn value_literal(v: &Value) -> String {
    match v {
        Value::Str(s) => quote(s),
        Value::Int(i) => i.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Real(r) => {
            let s = format!("{r:?}");
            if s.contains('.') || !r.is_finite() {
                s
            } else if let Some((m, e)) = s.split_once('e') {
                format!("{m}.0e{e}")
            } else {
                format!("{s}.0")
            }
        }
    }
}

/// Serialized node names: the parsed name where usable, `n<id>` otherwise,
/// made unique.
pub fn node_names(g: &HostGraph) -> BTreeMap<NodeId, String> {
    let mut taken = BTreeSet::new();
    let mut names = BTreeMap::new();
    let mut pending = Vec::new();
    for id in g.node_ids() {
        match g.node_name(id).filter(|n| check_name(n).is_ok()) {
            Some(n) if taken.insert(n.to_string()) => {
                names.insert(id, n.to_string());
            }
            _ => pending.push(id),
        }
    }
    for id in pending {
        let base = format!("n{}", id.raw());
        let mut name = base.clone();
        let mut k = 1;
        while !taken.insert(name.clone()) {
            name = format!("{base}_{k}");
            k += 1;
        }
        names.insert(id, name);
    }
    names
}

/// Deterministic text form of `g`: node lines sorted by name, then attribute
/// lines, then edge lines sorted lexicographically.
pub fn serialize_graph(g: &HostGraph) -> String {
    let names = node_names(g);
    let mut order: Vec<(&str, NodeId)> = names.iter().map(|(id, n)| (n.as_str(), *id)).collect();
    order.sort();
    let gname = if check_name(g.name()).is_ok() { g.name() } else { "g" };
    let mut out = format!("graph {gname}\n");
    for &(name, id) in &order {
        let node = g.node(id).expect("listed node");
        out.push_str("node ");
        out.push_str(name);
        let types: Vec<&str> = node.types().collect();
        if !types.is_empty() {
            out.push_str(" : ");
            out.push_str(&types.join(", "));
        }
        for f in node.flags() {
            out.push_str(" flag ");
            out.push_str(f);
        }
        out.push('\n');
    }
    for &(name, id) in &order {
        for (k, v) in g.node(id).expect("listed node").attrs() {
            out.push_str(&format!("attr {name}.{k} = {}\n", value_literal(v)));
        }
    }
    let mut edges: Vec<(&str, &str, &str)> = g
        .edges()
        .map(|(s, l, t)| (names[&s].as_str(), l, names[&t].as_str()))
        .collect();
    edges.sort();
    for (s, l, t) in edges {
        out.push_str(&format!("edge {s} -{l}-> {t}\n"));
    }
    out
}
