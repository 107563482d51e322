//! Rule application with single-pushout semantics.
//!
//! An application first plans an [`Effect`] against the unchanged host graph,
//! collecting the contributions of the root match and of every quantifier
//! extension, and then applies it in one step. All extensions therefore see
//! the pre-state: a universally quantified rule that swaps two labels swaps
//! each edge exactly once.
//!
//! Conflicts are resolved by deletion: edges to deleted nodes are not created,
//! and attribute or flag writes on deleted nodes are dropped.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::format::{render, FormatError};
use crate::graph::{HostGraph, NodeId};
use crate::label::Value;
use crate::matcher::{LevelMatchSet, Match, Matcher};
use crate::rule::{AttrOp, EdgeLabel, QuantId, Role, Rule, RuleNodeId};
use crate::types::TypeEnv;

/// Endpoint of a planned edge creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Host(NodeId),
    /// Index into [`Effect::node_creations`].
    Created(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeCreation {
    pub types: BTreeSet<String>,
    pub flags: BTreeSet<String>,
    pub attrs: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlagChange {
    Add,
    Remove,
}

/// The simultaneous update of one rule application.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Effect {
    pub node_deletions: BTreeSet<NodeId>,
    pub edge_deletions: BTreeSet<(NodeId, String, NodeId)>,
    pub node_creations: Vec<NodeCreation>,
    pub edge_creations: BTreeSet<(Endpoint, String, Endpoint)>,
    pub attr_writes: BTreeMap<(NodeId, String), Value>,
    pub attr_removals: BTreeSet<(NodeId, String)>,
    pub flag_changes: BTreeSet<(NodeId, String, FlagChange)>,
    pub param_values: BTreeMap<u32, Value>,
    pub counts: BTreeMap<QuantId, usize>,
}

impl Effect {
    /// Whether applying the effect leaves the graph unchanged by construction.
    pub fn is_empty(&self) -> bool {
        self.node_deletions.is_empty()
            && self.edge_deletions.is_empty()
            && self.node_creations.is_empty()
            && self.edge_creations.is_empty()
            && self.attr_writes.is_empty()
            && self.attr_removals.is_empty()
            && self.flag_changes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApplicationResult {
    pub graph: HostGraph,
    pub output: String,
    pub effect: Effect,
}

/// Plans the application of `r` at `root`, evaluating all quantifier levels
/// against the unchanged `g`.
pub fn plan_application(r: &Rule, g: &HostGraph, env: TypeEnv<'_>, root: &Match) -> Effect {
    let set = Matcher::new(r, g, env).level_matches(root);
    plan_from_levels(r, g, &set)
}

pub fn plan_from_levels(r: &Rule, g: &HostGraph, set: &LevelMatchSet) -> Effect {
    let mut e = Effect::default();
    let mut created: BTreeMap<(usize, RuleNodeId), usize> = BTreeMap::new();
    let pre_attr = |m: &Match, from: RuleNodeId, attr: &str| m.get(from).and_then(|h| g.attr(h, attr)).cloned();

    for (idx, inst) in set.instances.iter().enumerate() {
        let m = &inst.matched;
        let (nodes, edges) = r.level_elements(inst.level).unwrap_or_default();
        for id in nodes {
            let rn = r.node(id);
            match rn.role {
                Role::Embargo => {}
                Role::Eraser => {
                    if let Some(h) = m.get(id) {
                        e.node_deletions.insert(h);
                    }
                }
                Role::Creator => {
                    let mut c = NodeCreation::default();
                    c.types.extend(rn.type_constraint.iter().cloned());
                    c.flags.extend(
                        rn.flags
                            .iter()
                            .filter(|(_, role)| matches!(role, Role::Reader | Role::Creator))
                            .map(|(f, _)| f.clone()),
                    );
                    for a in &rn.attrs {
                        let v = match &a.op {
                            AttrOp::Assign(v) => Some(v.clone()),
                            AttrOp::Copy { from, attr } => pre_attr(m, *from, attr),
                            _ => None,
                        };
                        if let Some(v) = v {
                            c.attrs.entry(a.name.clone()).or_insert(v);
                        }
                    }
                    e.node_creations.push(c);
                    created.insert((idx, id), e.node_creations.len() - 1);
                }
                Role::Reader => {
                    let Some(h) = m.get(id) else { continue };
                    for a in &rn.attrs {
                        match &a.op {
                            AttrOp::Assign(v) => {
                                e.attr_writes.entry((h, a.name.clone())).or_insert_with(|| v.clone());
                            }
                            AttrOp::Copy { from, attr } => {
                                if let Some(v) = pre_attr(m, *from, attr) {
                                    e.attr_writes.entry((h, a.name.clone())).or_insert(v);
                                }
                            }
                            AttrOp::Drop => {
                                e.attr_removals.insert((h, a.name.clone()));
                            }
                            AttrOp::Match(_) => {}
                        }
                    }
                    for (flag, role) in &rn.flags {
                        match role {
                            Role::Creator => e.flag_changes.insert((h, flag.clone(), FlagChange::Add)),
                            Role::Eraser => e.flag_changes.insert((h, flag.clone(), FlagChange::Remove)),
                            _ => false,
                        };
                    }
                }
            }
        }

        let endpoint = |n: RuleNodeId| -> Option<Endpoint> {
            let rn = r.node(n);
            if rn.role != Role::Creator {
                return m.get(n).map(Endpoint::Host);
            }
            let mut cur = Some(idx);
            while let Some(i) = cur {
                if set.instances[i].level == rn.level {
                    return created.get(&(i, n)).map(|&c| Endpoint::Created(c));
                }
                cur = set.instances[i].parent;
            }
            None
        };
        for ei in edges {
            let edge = &r.edges()[ei];
            let EdgeLabel::Plain(label) = &edge.label else { continue };
            match edge.role {
                Role::Eraser => {
                    if let (Some(s), Some(t)) = (m.get(edge.src), m.get(edge.tgt)) {
                        e.edge_deletions.insert((s, label.clone(), t));
                    }
                }
                Role::Creator => {
                    if let (Some(s), Some(t)) = (endpoint(edge.src), endpoint(edge.tgt)) {
                        e.edge_creations.insert((s, label.clone(), t));
                    }
                }
                _ => {}
            }
        }
    }

    // parameters: root binds, creator binds and quantifier counts
    let root = set.root();
    e.param_values
        .extend(root.params().iter().map(|(k, v)| (*k, v.clone())));
    for (&k, (n, attr)) in r.params() {
        if let Some(&c) = created.get(&(0, *n)) {
            if let Some(v) = e.node_creations[c].attrs.get(attr) {
                e.param_values.insert(k, v.clone());
            }
        }
    }
    for (qi, q) in r.quantifiers().iter().enumerate() {
        if let Some(p) = q.count_param {
            let n = set.count(QuantId(qi as u32));
            e.param_values.insert(p, Value::Int(n as i64));
        }
    }
    e.counts = set.counts.clone();

    let dead = e.node_deletions.clone();
    let alive = |p: &Endpoint| !matches!(p, Endpoint::Host(h) if dead.contains(h));
    e.edge_creations.retain(|(s, _, t)| alive(s) && alive(t));
    e.attr_writes.retain(|(h, _), _| !dead.contains(h));
    e.attr_removals.retain(|(h, _)| !dead.contains(h));
    e.flag_changes.retain(|(h, _, _)| !dead.contains(h));
    e
}

/// Applies `e` to a copy of `g`: edge deletions, node deletions (with their
/// incident edges), node creations, edge creations, then attribute and flag
/// updates.
pub fn apply_effect(g: &HostGraph, e: &Effect) -> HostGraph {
    let mut out = g.clone();
    for (s, l, t) in &e.edge_deletions {
        out.remove_edge(*s, l, *t);
    }
    for &n in &e.node_deletions {
        let _ = out.delete_node_spo(n);
    }
    let fresh: Vec<NodeId> = e
        .node_creations
        .iter()
        .map(|c| out.insert_raw_node(c.types.clone(), c.flags.clone(), c.attrs.clone()))
        .collect();
    let resolve = |p: &Endpoint| match p {
        Endpoint::Host(h) => *h,
        Endpoint::Created(i) => fresh[*i],
    };
    for (s, l, t) in &e.edge_creations {
        // endpoints deleted above are skipped
        let _ = out.insert_edge(resolve(s), l, resolve(t));
    }
    for (h, name) in &e.attr_removals {
        let _ = out.remove_attr(*h, name);
    }
    for ((h, name), v) in &e.attr_writes {
        if out.contains_node(*h) {
            let _ = out.set_attr(*h, name, v.clone());
        }
    }
    for change in [FlagChange::Add, FlagChange::Remove] {
        for (h, flag, c) in &e.flag_changes {
            if *c == change {
                out.set_flag(*h, flag, change == FlagChange::Add);
            }
        }
    }
    out
}

/// Renders the rule's print format with the effect's parameter values in
/// ascending index order. Rules without a format print nothing.
pub fn render_output(r: &Rule, e: &Effect) -> Result<String, FormatError> {
    let Some(fmt) = r.print_format() else {
        return Ok(String::new());
    };
    let values: Vec<&Value> = e.param_values.values().collect();
    render(fmt, &values)
}

pub fn apply_match(r: &Rule, g: &HostGraph, env: TypeEnv<'_>, root: &Match) -> Result<ApplicationResult, FormatError> {
    let effect = plan_application(r, g, env, root);
    let output = render_output(r, &effect)?;
    Ok(ApplicationResult {
        graph: apply_effect(g, &effect),
        output,
        effect,
    })
}

/// Applies `r` once at its first root match. `Ok(None)` if the rule is not
/// applicable.
pub fn apply_rule(r: &Rule, g: &HostGraph, env: TypeEnv<'_>) -> Result<Option<ApplicationResult>, FormatError> {
    let matcher = Matcher::new(r, g, env);
    let Some(root) = matcher.root_matches().into_iter().next() else {
        return Ok(None);
    };
    apply_match(r, g, env, &root).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label;
    use crate::rule::{QuantKind, RuleBuilder};

    fn lbl(s: &str) -> Label {
        Label::edge(s).unwrap()
    }

    struct Host {
        g: HostGraph,
        nodes: Vec<NodeId>,
    }

    impl Host {
        fn new(names: &[&str]) -> Self {
            let mut g = HostGraph::new("g");
            let nodes = names
                .iter()
                .map(|n| {
                    let id = g.add_node(&[Label::node_type("Node").unwrap()], &[]).unwrap();
                    g.set_attr(id, "name", (*n).into()).unwrap();
                    id
                })
                .collect();
            Host { g, nodes }
        }

        fn edge(&mut self, s: Option<usize>, t: Option<usize>) -> NodeId {
            let e = self.g.add_node(&[Label::node_type("Edge").unwrap()], &[]).unwrap();
            if let Some(s) = s {
                self.g.add_edge(e, &lbl("src"), self.nodes[s]).unwrap();
            }
            if let Some(t) = t {
                self.g.add_edge(e, &lbl("trg"), self.nodes[t]).unwrap();
            }
            e
        }
    }

    fn reverse() -> Rule {
        let mut b = RuleBuilder::new("reverseEdges");
        for (from, to) in [("src", "trg"), ("trg", "src")] {
            let q = b.quant(from, QuantKind::Forall, QuantId::ROOT);
            let e = b.node("e", Role::Reader, Some("Edge"), q);
            let x = b.node("x", Role::Reader, Some("Node"), q);
            b.edge(e, from, x, Role::Eraser, q);
            b.edge(e, to, x, Role::Creator, q);
        }
        b.build().unwrap()
    }

    fn swapped(g: &HostGraph) -> HostGraph {
        let mut out = g.clone();
        for (s, l, t) in g.edges() {
            out.remove_edge(s, l, t);
        }
        for (s, l, t) in g.edges() {
            let l = match l {
                "src" => "trg",
                "trg" => "src",
                other => other,
            };
            out.add_edge(s, &lbl(l), t).unwrap();
        }
        out
    }

    #[test]
    fn reverse_flips_every_edge_once() {
        let mut h = Host::new(&["a", "b", "c"]);
        h.edge(Some(0), Some(1));
        h.edge(Some(1), Some(1));
        h.edge(Some(2), None);
        h.edge(None, Some(0));
        let once = apply_rule(&reverse(), &h.g, TypeEnv::untyped()).unwrap().unwrap();
        assert_eq!(once.graph, swapped(&h.g));
        let twice = apply_rule(&reverse(), &once.graph, TypeEnv::untyped())
            .unwrap()
            .unwrap();
        assert_eq!(twice.graph, h.g);
    }

    fn delete_with_edges() -> Rule {
        let mut b = RuleBuilder::new("deleteNodeN1WithEdges");
        let n = b.node("n", Role::Eraser, Some("Node"), QuantId::ROOT);
        b.attr(n, "name", AttrOp::Match("n1".into()));
        for label in ["src", "trg"] {
            let q = b.quant(label, QuantKind::Forall, QuantId::ROOT);
            let e = b.node("e", Role::Eraser, Some("Edge"), q);
            b.edge(e, label, n, Role::Reader, q);
        }
        b.build().unwrap()
    }

    #[test]
    fn loop_edge_is_deleted_once() {
        let mut h = Host::new(&["n1", "n2"]);
        let lp = h.edge(Some(0), Some(0));
        let out = h.edge(Some(0), Some(1));
        let keep = h.edge(Some(1), Some(1));
        let res = apply_rule(&delete_with_edges(), &h.g, TypeEnv::untyped())
            .unwrap()
            .unwrap();
        assert_eq!(
            res.effect.node_deletions,
            [h.nodes[0], lp, out].into_iter().collect::<BTreeSet<_>>()
        );
        assert_eq!(res.effect.counts.values().sum::<usize>(), 3);
        assert!(res.graph.contains_node(keep));
        assert_eq!(res.graph.node_count(), 2);
        assert!(res.graph.dangling_edges().is_empty());
    }

    #[test]
    fn spo_delete_keeps_edge_nodes() {
        let mut b = RuleBuilder::new("deleteNodeN1");
        let n = b.node("n", Role::Eraser, Some("Node"), QuantId::ROOT);
        b.attr(n, "name", AttrOp::Match("n1".into()));
        let r = b.build().unwrap();
        let mut h = Host::new(&["n1", "n2"]);
        let e1 = h.edge(Some(0), Some(1));
        let e2 = h.edge(Some(1), Some(0));
        let res = apply_rule(&r, &h.g, TypeEnv::untyped()).unwrap().unwrap();
        assert!(!res.graph.contains_node(h.nodes[0]));
        assert!(res.graph.contains_node(e1) && res.graph.contains_node(e2));
        assert_eq!(res.graph.edge_count(), 2);
        assert!(res.graph.dangling_edges().is_empty());
    }

    #[test]
    fn vacuous_forall_still_applies_root_creators() {
        let mut b = RuleBuilder::new("r");
        let q = b.quant("q", QuantKind::Forall, QuantId::ROOT);
        b.count(q, 0);
        b.node("n", Role::Reader, Some("Node"), q);
        let c = b.node("c", Role::Creator, Some("Counter"), QuantId::ROOT);
        b.attr(c, "text", AttrOp::Assign("made".into()));
        let r = b.build().unwrap();
        let res = apply_rule(&r, &HostGraph::new("empty"), TypeEnv::untyped())
            .unwrap()
            .unwrap();
        assert_eq!(res.effect.node_creations.len(), 1);
        assert_eq!(res.effect.param_values.get(&0), Some(&Value::Int(0)));
        assert_eq!(res.graph.node_count(), 1);
    }

    #[test]
    fn delete_beats_create() {
        let mut g = HostGraph::new("g");
        let a = g.add_node(&[], &[]).unwrap();
        let b = g.add_node(&[], &[]).unwrap();
        let mut e = Effect::default();
        e.node_deletions.insert(a);
        e.edge_creations
            .insert((Endpoint::Host(a), "x".into(), Endpoint::Host(b)));
        e.attr_writes.insert((a, "k".into()), Value::Int(1));
        let out = apply_effect(&g, &e);
        assert_eq!(out.node_count(), 1);
        assert_eq!(out.edge_count(), 0);
    }

    #[test]
    fn duplicate_creations_collapse() {
        let mut g = HostGraph::new("g");
        let a = g.add_node(&[], &[]).unwrap();
        let mut e = Effect::default();
        e.node_creations.push(NodeCreation::default());
        e.edge_creations
            .insert((Endpoint::Host(a), "x".into(), Endpoint::Created(0)));
        e.edge_creations
            .insert((Endpoint::Host(a), "x".into(), Endpoint::Created(0)));
        let out = apply_effect(&g, &e);
        assert_eq!(out.edge_count(), 1);
        assert_eq!(out.node_count(), 2);
    }

    #[test]
    fn hello_message_output() {
        let mut b = RuleBuilder::new("helloMessage");
        let gm = b.node("gm", Role::Creator, Some("GreetingMessage"), QuantId::ROOT);
        let p = b.node("p", Role::Creator, Some("Person"), QuantId::ROOT);
        let gr = b.node("g", Role::Creator, Some("Greeting"), QuantId::ROOT);
        b.edge(gr, "greetingMessage", gm, Role::Creator, QuantId::ROOT);
        b.edge(gr, "person", p, Role::Creator, QuantId::ROOT);
        b.attr(gm, "text", AttrOp::Assign("Hello".into()));
        b.attr(p, "name", AttrOp::Assign("TTC Participants".into()));
        b.bind(0, gm, "text");
        b.bind(1, p, "name");
        b.format("The output is %s %s %n");
        let r = b.build().unwrap();
        let res = apply_rule(&r, &HostGraph::new("g"), TypeEnv::untyped())
            .unwrap()
            .unwrap();
        assert_eq!(res.output, "The output is Hello TTC Participants \n");
        assert_eq!(res.graph.node_count(), 3);
        assert_eq!(res.graph.edge_count(), 2);
    }

    #[test]
    fn format_arity_error_surfaces() {
        let mut b = RuleBuilder::new("r");
        b.format("%s");
        let r = b.build().unwrap();
        assert_eq!(
            apply_rule(&r, &HostGraph::new("g"), TypeEnv::untyped()),
            Err(FormatError::Arity {
                wanted: 1,
                available: 0
            })
        );
    }

    #[test]
    fn attribute_rename_copies_pre_state() {
        let mut b = RuleBuilder::new("rename");
        let q = b.quant("q", QuantKind::Forall, QuantId::ROOT);
        let n = b.node("n", Role::Reader, Some("Node"), q);
        b.attr(n, "name", AttrOp::Drop);
        b.attr(
            n,
            "text",
            AttrOp::Copy {
                from: n,
                attr: "name".into(),
            },
        );
        let r = b.build().unwrap();
        let h = Host::new(&["n1", "n2"]);
        let res = apply_rule(&r, &h.g, TypeEnv::untyped()).unwrap().unwrap();
        for (i, name) in ["n1", "n2"].iter().enumerate() {
            let node = res.graph.node(h.nodes[i]).unwrap();
            assert_eq!(node.attr("text"), Some(&Value::from(*name)));
            assert_eq!(node.attr("name"), None);
        }
    }

    #[test]
    fn flags_toggle() {
        let mut b = RuleBuilder::new("flip");
        let n = b.node("n", Role::Reader, None, QuantId::ROOT);
        b.flag(n, Role::Eraser, "on").flag(n, Role::Creator, "off");
        let r = b.build().unwrap();
        let mut g = HostGraph::new("g");
        let a = g.add_node(&[], &[Label::flag("on").unwrap()]).unwrap();
        let res = apply_rule(&r, &g, TypeEnv::untyped()).unwrap().unwrap();
        let node = res.graph.node(a).unwrap();
        assert!(node.has_flag("off") && !node.has_flag("on"));
        assert_eq!(apply_rule(&r, &res.graph, TypeEnv::untyped()).unwrap(), None);
    }

    #[test]
    fn reader_only_rule_keeps_graph() {
        let mut b = RuleBuilder::new("countNodes");
        let q = b.quant("q", QuantKind::Forall, QuantId::ROOT);
        b.count(q, 0);
        b.node("n", Role::Reader, Some("Node"), q);
        b.format("%s%n");
        let r = b.build().unwrap();
        assert!(r.is_reader_only());
        let mut h = Host::new(&["a", "b", "c", "d"]);
        h.edge(Some(0), Some(1));
        let res = apply_rule(&r, &h.g, TypeEnv::untyped()).unwrap().unwrap();
        assert_eq!(res.output, "4\n");
        assert!(res.effect.is_empty());
        assert_eq!(res.graph, h.g);
    }
}
