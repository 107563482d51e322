//! The Hello World fixture suite: the shipped grammar, brute-force oracles
//! over nodified graphs, and one checked fixture per task.
//!
//! In a nodified graph every edge of the modelled graph is an `Edge` node
//! with a `src` edge to its source `Node` and a `trg` edge to its target.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use gtx_core::explore::isomorphic;
use gtx_core::graph::{HostGraph, NodeId};
use gtx_core::label::{Label, Value};
use gtx_core::rewrite::{apply_rule, ApplicationResult};
use gtx_core::types::conforms;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsl::serialize_graph;
use crate::grammar::GrammarDir;

macro_rules! fixture_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../fixtures/helloworld/", $name)))),*]
    };
}

/// The shipped grammar files, by file name.
pub const FIXTURE_FILES: &[(&str, &str)] = fixture_files!(
    "grammar.conf",
    "Greeting.gty",
    "GreetingMessage.gty",
    "Graph.gty",
    "GraphComponent.gty",
    "NoEdge.gty",
    "start.gst",
    "makeGreeting.gpr",
    "helloMessage.gpr",
    "countNodes.gpr",
    "countLoopingEdges.gpr",
    "countIsolatedNodes.gpr",
    "countCyclesOfThree.gpr",
    "countDanglingEdges.gpr",
    "reverseEdges.gpr",
    "migrateToGraphComponent.gpr",
    "migrateTopologyChange.gpr",
    "deleteNodeN1.gpr",
    "deleteNodeN1WithEdges.gpr",
    "insertTransitiveEdges.gpr",
);

pub fn helloworld() -> GrammarDir {
    GrammarDir::from_sources(FIXTURE_FILES.iter().copied()).expect("shipped grammar is valid")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub nodes: usize,
    pub loops: usize,
    pub isolated: usize,
    pub cycles3: usize,
    pub dangling: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("Edge node {node} has {count} `{label}` edges")]
    Malformed {
        node: NodeId,
        label: &'static str,
        count: usize,
    },
}

fn endpoint(g: &HostGraph, e: NodeId, label: &'static str) -> Result<Option<NodeId>, OracleError> {
    let ts: Vec<NodeId> = g.out_edges(e).filter(|(l, _)| *l == label).map(|(_, t)| t).collect();
    match ts.as_slice() {
        [] => Ok(None),
        [t] => Ok(Some(*t)),
        _ => Err(OracleError::Malformed {
            node: e,
            label,
            count: ts.len(),
        }),
    }
}

fn typed(g: &HostGraph, ty: &str) -> Vec<NodeId> {
    g.nodes().filter(|(_, n)| n.has_type(ty)).map(|(id, _)| id).collect()
}

/// Pairs `(a, b)` joined by a complete `Edge` node.
pub fn links(g: &HostGraph) -> Result<BTreeSet<(NodeId, NodeId)>, OracleError> {
    let mut out = BTreeSet::new();
    for e in typed(g, "Edge") {
        if let (Some(s), Some(t)) = (endpoint(g, e, "src")?, endpoint(g, e, "trg")?) {
            out.insert((s, t));
        }
    }
    Ok(out)
}

/// Counts of the five counting tasks, by direct evaluation of their
/// definitions.
pub fn oracle_counts(g: &HostGraph) -> Result<Counts, OracleError> {
    let nodes = typed(g, "Node");
    let mut c = Counts {
        nodes: nodes.len(),
        ..Counts::default()
    };
    for e in typed(g, "Edge") {
        let s = endpoint(g, e, "src")?;
        let t = endpoint(g, e, "trg")?;
        if s.is_some() && s == t {
            c.loops += 1;
        }
        if s.is_none() || t.is_none() {
            c.dangling += 1;
        }
    }
    c.isolated = nodes
        .iter()
        .filter(|&&n| !g.in_edges(n).any(|(l, _)| l == "src" || l == "trg"))
        .count();
    let l = links(g)?;
    for &a in &nodes {
        for &b in &nodes {
            for &d in &nodes {
                if a != b && b != d && a != d && l.contains(&(a, b)) && l.contains(&(b, d)) && l.contains(&(d, a)) {
                    c.cycles3 += 1;
                }
            }
        }
    }
    Ok(c)
}

/// Reflexive-free transitive closure `R+`.
pub fn transitive_closure(rel: &BTreeSet<(NodeId, NodeId)>) -> BTreeSet<(NodeId, NodeId)> {
    let mut succ: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
    for &(a, b) in rel {
        succ.entry(a).or_default().insert(b);
    }
    let mut out = BTreeSet::new();
    for &start in succ.keys() {
        let mut stack: Vec<NodeId> = succ[&start].iter().copied().collect();
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                out.insert((start, n));
                stack.extend(succ.get(&n).into_iter().flatten().copied());
            }
        }
    }
    out
}

/// `g` with every `src` edge turned into a `trg` edge and vice versa.
pub fn swap_labels(g: &HostGraph) -> HostGraph {
    let mut out = g.clone();
    let edges: Vec<(NodeId, String, NodeId)> = g.edges().map(|(s, l, t)| (s, l.to_string(), t)).collect();
    for (s, l, t) in &edges {
        if l == "src" || l == "trg" {
            out.remove_edge(*s, l, *t);
        }
    }
    for (s, l, t) in &edges {
        let swapped = match l.as_str() {
            "src" => "trg",
            "trg" => "src",
            _ => continue,
        };
        out.add_edge(*s, &Label::edge(swapped).expect("label"), *t)
            .expect("endpoints exist");
    }
    out
}

/// Random nodified graph with a `Graph` container, up to `max_nodes` named
/// `Node`s and up to `max_edges` `Edge` nodes. Each `Edge` node misses its
/// `src` or `trg` with some probability.
pub fn random_nodified(rng: &mut impl Rng, max_nodes: usize, max_edges: usize) -> HostGraph {
    let ty = |t: &str| Label::node_type(t).expect("label");
    let lbl = |l: &str| Label::edge(l).expect("label");
    let mut g = HostGraph::new("random");
    let root = g.add_node(&[ty("Graph")], &[]).expect("labels");
    g.set_node_name(root, "g").expect("node");
    let k = rng.random_range(0..=max_nodes);
    let nodes: Vec<NodeId> = (1..=k)
        .map(|i| {
            let n = g.add_node(&[ty("Node")], &[]).expect("labels");
            g.set_attr(n, "name", Value::Str(format!("n{i}"))).expect("node");
            g.set_node_name(n, format!("n{i}")).expect("node");
            g.add_edge(root, &lbl("nodes"), n).expect("node");
            n
        })
        .collect();
    let m = rng.random_range(0..=max_edges);
    for i in 1..=m {
        let e = g.add_node(&[ty("Edge")], &[]).expect("labels");
        g.set_node_name(e, format!("e{i}")).expect("node");
        g.add_edge(root, &lbl("edges"), e).expect("node");
        if nodes.is_empty() {
            continue;
        }
        for label in ["src", "trg"] {
            if rng.random_bool(0.85) {
                let t = nodes[rng.random_range(0..nodes.len())];
                g.add_edge(e, &lbl(label), t).expect("node");
            }
        }
    }
    g
}

/// Line-level difference of the serialized graphs: `-` lines are only in
/// `expected`, `+` lines only in `actual`.
pub fn diff_graphs(expected: &HostGraph, actual: &HostGraph) -> String {
    let a = serialize_graph(expected);
    let b = serialize_graph(actual);
    let la: BTreeSet<&str> = a.lines().collect();
    let lb: BTreeSet<&str> = b.lines().collect();
    let mut out = String::new();
    for l in la.difference(&lb) {
        out.push_str(&format!("- {l}\n"));
    }
    for l in lb.difference(&la) {
        out.push_str(&format!("+ {l}\n"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random graphs per counting fixture.
    pub random_cases: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 0x6a7e,
            random_cases: 200,
        }
    }
}

struct Ctx<'a> {
    grammar: &'a GrammarDir,
    cfg: SuiteConfig,
    applications: Cell<usize>,
}

impl Ctx<'_> {
    /// One application of `rule` at its first match.
    fn apply(&self, rule: &str, g: &HostGraph) -> Result<ApplicationResult, String> {
        let r = self
            .grammar
            .rule(rule)
            .ok_or_else(|| format!("rule `{rule}` is missing"))?;
        apply_rule(r, g, self.grammar.env())
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("rule `{rule}` is not applicable"))
    }

    /// [`Ctx::apply`] on the start graph, counted.
    fn apply_start(&self, rule: &str) -> Result<ApplicationResult, String> {
        self.applications.set(self.applications.get() + 1);
        self.apply(rule, self.grammar.start())
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.cfg.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn expect_output(res: &ApplicationResult, want: &str) -> Result<(), String> {
    ensure(res.output == want, || {
        format!("printed {:?}, expected {:?}", res.output, want)
    })
}

/// Node ids of `after` that are not in `before`.
fn fresh_nodes(before: &HostGraph, after: &HostGraph) -> Vec<NodeId> {
    after.node_ids().filter(|n| !before.contains_node(*n)).collect()
}

fn check_make_greeting(ctx: &Ctx<'_>) -> Result<(), String> {
    let before = ctx.grammar.start();
    let res = ctx.apply_start("makeGreeting")?;
    expect_output(&res, "Hello World\n")?;
    let fresh = fresh_nodes(before, &res.graph);
    ensure(fresh.len() == 1, || {
        format!("{} nodes created, expected 1", fresh.len())
    })?;
    let n = res.graph.node(fresh[0]).expect("fresh node");
    ensure(
        n.has_type("Greeting") && n.attr("text") == Some(&Value::from("Hello World")),
        || format!("created node {n:?}"),
    )?;
    ensure(res.graph.edge_count() == before.edge_count(), || "edges changed".into())
}

fn check_hello_message(ctx: &Ctx<'_>) -> Result<(), String> {
    let before = ctx.grammar.start();
    let res = ctx.apply_start("helloMessage")?;
    expect_output(&res, "The output is Hello TTC Participants \n")?;
    let fresh = fresh_nodes(before, &res.graph);
    ensure(fresh.len() == 3, || {
        format!("{} nodes created, expected 3", fresh.len())
    })?;
    ensure(res.graph.edge_count() == before.edge_count() + 2, || {
        "expected two new edges".into()
    })
}

fn check_count(ctx: &Ctx<'_>, rule: &str, salt: u64, field: fn(&Counts) -> usize) -> Result<(), String> {
    let one = |g: &HostGraph, res: ApplicationResult| -> Result<(), String> {
        let want = field(&oracle_counts(g).map_err(|e| e.to_string())?);
        expect_output(&res, &format!("{want}\n"))?;
        ensure(&res.graph == g, || {
            format!("graph changed:\n{}", diff_graphs(g, &res.graph))
        })
    };
    one(ctx.grammar.start(), ctx.apply_start(rule)?)?;
    let mut rng = ctx.rng(salt);
    for i in 0..ctx.cfg.random_cases {
        let g = random_nodified(&mut rng, 8, 12);
        one(&g, ctx.apply(rule, &g)?).map_err(|e| format!("random graph {i}: {e}\n{}", serialize_graph(&g)))?;
    }
    Ok(())
}

fn check_reverse(ctx: &Ctx<'_>) -> Result<(), String> {
    let before = ctx.grammar.start();
    let res = ctx.apply_start("reverseEdges")?;
    let want = swap_labels(before);
    ensure(res.graph == want, || {
        format!("graph differs:\n{}", diff_graphs(&want, &res.graph))
    })?;
    let back = ctx.apply("reverseEdges", &res.graph)?;
    ensure(isomorphic(&back.graph, before), || {
        format!("second application differs:\n{}", diff_graphs(before, &back.graph))
    })
}

fn check_migrate_gc(ctx: &Ctx<'_>) -> Result<(), String> {
    let before = ctx.grammar.start();
    let res = ctx.apply_start("migrateToGraphComponent")?;
    let after = &res.graph;
    let tg = ctx
        .grammar
        .type_graph("GraphComponent")
        .ok_or("GraphComponent type graph missing")?;
    let vs = conforms(std::slice::from_ref(tg), after);
    ensure(vs.is_empty(), || format!("not a GraphComponent graph: {vs:?}"))?;
    for (s, l, t) in before.edges() {
        if l == "nodes" || l == "edges" {
            ensure(after.has_edge(s, "gcs", t) && !after.has_edge(s, l, t), || {
                format!("{s} -{l}-> {t} was not relabelled")
            })?;
        }
    }
    for (id, n) in before.nodes() {
        let m = after.node(id).ok_or_else(|| format!("node {id} vanished"))?;
        if n.has_type("Node") {
            ensure(m.attr("name").is_none() && m.attr("text") == n.attr("name"), || {
                format!("node {id}: name not renamed to text")
            })?;
        }
        if n.has_type("Edge") {
            ensure(m.attr("text") == Some(&Value::from("")), || {
                format!("edge node {id}: text not initialised")
            })?;
        }
    }
    ensure(after.node_count() == before.node_count(), || {
        "node count changed".into()
    })
}

fn check_migrate_topology(ctx: &Ctx<'_>) -> Result<(), String> {
    let before = ctx.grammar.start();
    let res = ctx.apply_start("migrateTopologyChange")?;
    let after = &res.graph;
    ensure(typed(after, "Edge").is_empty(), || "Edge nodes remain".into())?;
    let want = links(before).map_err(|e| e.to_string())?;
    let got: BTreeSet<(NodeId, NodeId)> = after
        .edges()
        .filter(|(_, l, _)| *l == "linksTo")
        .map(|(s, _, t)| (s, t))
        .collect();
    ensure(got == want, || format!("linksTo {got:?}, expected {want:?}"))?;
    let tg = ctx.grammar.type_graph("NoEdge").ok_or("NoEdge type graph missing")?;
    let vs = conforms(std::slice::from_ref(tg), after);
    ensure(vs.is_empty(), || format!("not a NoEdge graph: {vs:?}"))
}

fn node_named(g: &HostGraph, name: &str) -> Option<NodeId> {
    typed(g, "Node")
        .into_iter()
        .find(|&n| g.attr(n, "name") == Some(&Value::from(name)))
}

fn check_delete(ctx: &Ctx<'_>) -> Result<(), String> {
    let before = ctx.grammar.start();
    let n1 = node_named(before, "n1").ok_or("start graph has no n1")?;
    let res = ctx.apply_start("deleteNodeN1")?;
    let after = &res.graph;
    let incident = before.out_edges(n1).count() + before.in_edges(n1).count()
        - usize::from(before.out_edges(n1).any(|(_, t)| t == n1));
    let mut want = before.clone();
    for (s, l, t) in before.edges().filter(|(s, _, t)| *s == n1 || *t == n1) {
        want.remove_edge(s, l, t);
    }
    ensure(node_named(after, "n1").is_none(), || "n1 still present".into())?;
    ensure(after.dangling_edges().is_empty(), || "dangling references".into())?;
    ensure(after.edge_count() + incident == before.edge_count(), || {
        format!(
            "removed {} edges, expected {incident}",
            before.edge_count() - after.edge_count()
        )
    })?;
    ensure(before.node_ids().all(|n| n == n1 || after.contains_node(n)), || {
        "other nodes were deleted".into()
    })?;
    let _ = want.delete_node_spo(n1);
    ensure(&want == after, || diff_graphs(&want, after))
}

fn check_delete_with_edges(ctx: &Ctx<'_>) -> Result<(), String> {
    let before = ctx.grammar.start();
    let n1 = node_named(before, "n1").ok_or("start graph has no n1")?;
    let res = ctx.apply_start("deleteNodeN1WithEdges")?;
    let after = &res.graph;
    let doomed: BTreeSet<NodeId> = typed(before, "Edge")
        .into_iter()
        .filter(|&e| before.has_edge(e, "src", n1) || before.has_edge(e, "trg", n1))
        .chain([n1])
        .collect();
    let mut want = before.clone();
    for &n in &doomed {
        let _ = want.delete_node_spo(n);
    }
    ensure(&want == after, || diff_graphs(&want, after))?;
    ensure(after.dangling_edges().is_empty(), || "dangling references".into())
}

fn check_transitive(ctx: &Ctx<'_>) -> Result<(), String> {
    let before = ctx.grammar.start();
    let res = ctx.apply_start("insertTransitiveEdges")?;
    let (ok, detail) = transitive_step_ok(before, &res.graph);
    ensure(ok, || detail)
}

/// Whether `after` is `before` plus one complete `Edge` node for every
/// two-step pair of `before` that lacks a direct link.
pub fn transitive_step_ok(before: &HostGraph, after: &HostGraph) -> (bool, String) {
    let (Ok(l), Ok(la)) = (links(before), links(after)) else {
        return (false, "malformed graph".into());
    };
    let mut want = BTreeSet::new();
    for &(a, b) in &l {
        for &(b2, c) in &l {
            if b == b2 && !l.contains(&(a, c)) {
                want.insert((a, c));
            }
        }
    }
    let fresh = fresh_nodes(before, after);
    let mut got = BTreeSet::new();
    for &e in &fresh {
        let node = after.node(e).expect("fresh node");
        let (Ok(Some(s)), Ok(Some(t))) = (endpoint(after, e, "src"), endpoint(after, e, "trg")) else {
            return (false, format!("new node {e} is not a complete Edge"));
        };
        if !node.has_type("Edge") || !got.insert((s, t)) {
            return (false, format!("unexpected new node {e}"));
        }
    }
    if got != want {
        return (false, format!("inserted {got:?}, expected {want:?}"));
    }
    let kept = before.edges().all(|(s, l, t)| after.has_edge(s, l, t));
    if !kept || after.edge_count() != before.edge_count() + 2 * fresh.len() {
        return (false, "existing structure changed".into());
    }
    (la.len() == l.len() + want.len(), String::new())
}

type Check = fn(&Ctx<'_>) -> Result<(), String>;

pub struct Fixture {
    pub name: &'static str,
    check: Check,
}

impl fmt::Debug for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fixture").field("name", &self.name).finish()
    }
}

/// One fixture per task, in task order. The fixture name is the rule name.
pub fn fixtures() -> Vec<Fixture> {
    let f = |name, check| Fixture { name, check };
    vec![
        f("makeGreeting", check_make_greeting as Check),
        f("helloMessage", check_hello_message),
        f("countNodes", |c| check_count(c, "countNodes", 1, |k| k.nodes)),
        f("countLoopingEdges", |c| {
            check_count(c, "countLoopingEdges", 2, |k| k.loops)
        }),
        f("countIsolatedNodes", |c| {
            check_count(c, "countIsolatedNodes", 3, |k| k.isolated)
        }),
        f("countCyclesOfThree", |c| {
            check_count(c, "countCyclesOfThree", 4, |k| k.cycles3)
        }),
        f("countDanglingEdges", |c| {
            check_count(c, "countDanglingEdges", 5, |k| k.dangling)
        }),
        f("reverseEdges", check_reverse),
        f("migrateToGraphComponent", check_migrate_gc),
        f("migrateTopologyChange", check_migrate_topology),
        f("deleteNodeN1", check_delete),
        f("deleteNodeN1WithEdges", check_delete_with_edges),
        f("insertTransitiveEdges", check_transitive),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureResult {
    pub name: String,
    pub outcome: Result<(), String>,
    /// Rule applications on the start graph.
    pub applications: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub results: Vec<FixtureResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.outcome.is_ok())
    }

    pub fn get(&self, name: &str) -> Option<&FixtureResult> {
        self.results.iter().find(|r| r.name == name)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.results {
            match &r.outcome {
                Ok(()) => writeln!(f, "PASS {}", r.name)?,
                Err(e) => {
                    writeln!(f, "FAIL {}", r.name)?;
                    for line in e.lines() {
                        writeln!(f, "    {line}")?;
                    }
                }
            }
        }
        let ok = self.results.iter().filter(|r| r.outcome.is_ok()).count();
        writeln!(f, "{ok}/{} fixtures passed", self.results.len())
    }
}

pub fn run_suite() -> Report {
    run_suite_with(&helloworld(), SuiteConfig::default())
}

pub fn run_suite_with(grammar: &GrammarDir, cfg: SuiteConfig) -> Report {
    let results = fixtures()
        .into_iter()
        .map(|fx| {
            let ctx = Ctx {
                grammar,
                cfg,
                applications: Cell::new(0),
            };
            let outcome = (fx.check)(&ctx);
            FixtureResult {
                name: fx.name.into(),
                outcome,
                applications: ctx.applications.get(),
            }
        })
        .collect();
    Report { results }
}
