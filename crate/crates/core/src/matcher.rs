//! Rule matching: backtracking search over host nodes, level by level.
//!
//! Matching is non-injective unless the rule declares `neq` pairs. Each
//! quantifier level has a precomputed search plan: positive (reader and
//! eraser) nodes in most-constrained-first order, with every positive edge or
//! path checked as soon as both of its endpoints are bound. A bound neighbour
//! is used to generate candidates; otherwise all host nodes are tried in
//! ascending id order. NAC groups are searched the same way as extensions of
//! the positive match, and may reuse host nodes already in it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::graph::{HostGraph, NodeId};
use crate::label::Value;
use crate::rule::{AttrOp, Direction, EdgeLabel, QuantId, QuantKind, RegexPath, Role, Rule, RuleNode, RuleNodeId};
use crate::types::TypeEnv;

/// An assignment of rule nodes to host nodes, plus parameter values read from
/// matched attributes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    assignment: BTreeMap<RuleNodeId, NodeId>,
    params: BTreeMap<u32, Value>,
}

impl Match {
    pub fn get(&self, n: RuleNodeId) -> Option<NodeId> {
        self.assignment.get(&n).copied()
    }

    pub fn assignment(&self) -> &BTreeMap<RuleNodeId, NodeId> {
        &self.assignment
    }

    pub fn params(&self) -> &BTreeMap<u32, Value> {
        &self.params
    }

    fn from_slots(rule: &Rule, g: &HostGraph, slots: &Slots) -> Self {
        let assignment = slots
            .iter()
            .enumerate()
            .filter_map(|(i, h)| h.map(|h| (RuleNodeId(i as u32), h)))
            .collect();
        let params = rule
            .params()
            .iter()
            .filter_map(|(idx, (n, attr))| {
                let h = slots.get(n.index()).copied().flatten()?;
                g.attr(h, attr).map(|v| (*idx, v.clone()))
            })
            .collect();
        Match { assignment, params }
    }

    fn to_slots(&self, len: usize) -> Slots {
        let mut slots = vec![None; len];
        for (n, h) in &self.assignment {
            if let Some(s) = slots.get_mut(n.index()) {
                *s = Some(*h);
            }
        }
        slots
    }
}

/// One matched level instance: the root match, or one extension of a
/// universally or existentially quantified level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelInstance {
    pub level: QuantId,
    /// Index of the parent instance in [`LevelMatchSet::instances`].
    pub parent: Option<usize>,
    pub matched: Match,
}

/// All level instances below one root match, parents before children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelMatchSet {
    pub instances: Vec<LevelInstance>,
    pub counts: BTreeMap<QuantId, usize>,
}

impl LevelMatchSet {
    pub fn root(&self) -> &Match {
        &self.instances[0].matched
    }

    pub fn extensions(&self, q: QuantId) -> impl Iterator<Item = &Match> + '_ {
        self.instances.iter().filter(move |i| i.level == q).map(|i| &i.matched)
    }

    pub fn count(&self, q: QuantId) -> usize {
        self.counts.get(&q).copied().unwrap_or(0)
    }
}

/// Nodes reachable from `start` along `path`, computed one atom at a time.
pub fn evaluate_regex_path(g: &HostGraph, start: NodeId, path: &RegexPath) -> BTreeSet<NodeId> {
    let mut frontier: BTreeSet<NodeId> = BTreeSet::new();
    if g.contains_node(start) {
        frontier.insert(start);
    }
    for atom in path.atoms() {
        if frontier.is_empty() {
            break;
        }
        frontier = frontier
            .iter()
            .flat_map(|&n| -> Vec<NodeId> {
                match atom.direction {
                    Direction::Forward => g.successors(n, &atom.label).collect(),
                    Direction::Inverse => g.predecessors(n, &atom.label).collect(),
                }
            })
            .collect();
    }
    frontier
}

pub fn find_root_matches(r: &Rule, g: &HostGraph, env: TypeEnv<'_>) -> Vec<Match> {
    Matcher::new(r, g, env).root_matches()
}

/// Whether the NAC groups at `level` allow `m`.
pub fn check_nacs(r: &Rule, g: &HostGraph, env: TypeEnv<'_>, m: &Match, level: QuantId) -> bool {
    let matcher = Matcher::new(r, g, env);
    matcher.nacs_hold(level, &m.to_slots(r.nodes().len()))
}

pub fn collect_level_matches(r: &Rule, g: &HostGraph, env: TypeEnv<'_>, root: &Match) -> LevelMatchSet {
    Matcher::new(r, g, env).level_matches(root)
}

type Slots = Vec<Option<NodeId>>;

/// Search plan for one set of rule nodes and the edges they close.
#[derive(Debug, Clone, Default)]
struct Plan {
    order: Vec<RuleNodeId>,
    /// Edges whose endpoints are all bound before the search starts.
    pre: Vec<usize>,
    /// `steps[i]`: edges that become closed once `order[i]` is bound.
    steps: Vec<Vec<usize>>,
}

/// Matching state for one rule against one host graph.
pub struct Matcher<'a> {
    rule: &'a Rule,
    graph: &'a HostGraph,
    env: TypeEnv<'a>,
    /// Attributes that must exist on a node's image (copy sources, bound parameters).
    required: Vec<BTreeSet<&'a str>>,
    levels: Vec<Plan>,
    groups: Vec<Plan>,
}

impl<'a> Matcher<'a> {
    pub fn new(rule: &'a Rule, graph: &'a HostGraph, env: TypeEnv<'a>) -> Self {
        let n = rule.nodes().len();
        let mut required: Vec<BTreeSet<&'a str>> = vec![BTreeSet::new(); n];
        for node in rule.nodes() {
            for a in &node.attrs {
                if let AttrOp::Copy { from, attr } = &a.op {
                    if let Some(set) = required.get_mut(from.index()) {
                        set.insert(attr.as_str());
                    }
                }
            }
        }
        for (node, attr) in rule.params().values() {
            if rule.nodes().get(node.index()).is_some_and(|x| x.role.is_positive()) {
                required[node.index()].insert(attr.as_str());
            }
        }

        let levels = (0..rule.quantifiers().len())
            .map(|qi| {
                let q = QuantId(qi as u32);
                let nodes: Vec<RuleNodeId> = (0..n)
                    .map(|i| RuleNodeId(i as u32))
                    .filter(|&id| {
                        let x = rule.node(id);
                        x.level == q && x.role.is_positive()
                    })
                    .collect();
                let edges: Vec<usize> = rule
                    .edges()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.level == q && e.role.is_positive())
                    .map(|(i, _)| i)
                    .collect();
                make_plan(rule, nodes, edges)
            })
            .collect();
        let groups = rule
            .nac_groups()
            .iter()
            .map(|g| make_plan(rule, g.nodes.clone(), g.edges.clone()))
            .collect();
        Matcher {
            rule,
            graph,
            env,
            required,
            levels,
            groups,
        }
    }

    /// All root matches, in lexicographic order of their assignments.
    pub fn root_matches(&self) -> Vec<Match> {
        let base = vec![None; self.rule.nodes().len()];
        self.accepted(QuantId::ROOT, &base)
            .iter()
            .map(|s| Match::from_slots(self.rule, self.graph, s))
            .collect()
    }

    pub fn level_matches(&self, root: &Match) -> LevelMatchSet {
        let mut set = LevelMatchSet {
            instances: vec![LevelInstance {
                level: QuantId::ROOT,
                parent: None,
                matched: root.clone(),
            }],
            counts: BTreeMap::new(),
        };
        for (i, q) in self.rule.quantifiers().iter().enumerate() {
            if q.kind != QuantKind::Root {
                set.counts.insert(QuantId(i as u32), 0);
            }
        }
        let slots = root.to_slots(self.rule.nodes().len());
        self.collect_children(QuantId::ROOT, &slots, 0, &mut set);
        set
    }

    fn collect_children(&self, q: QuantId, slots: &Slots, parent: usize, set: &mut LevelMatchSet) {
        for child in self.rule.children(q) {
            for ext in self.accepted(child, slots) {
                set.instances.push(LevelInstance {
                    level: child,
                    parent: Some(parent),
                    matched: Match::from_slots(self.rule, self.graph, &ext),
                });
                *set.counts.entry(child).or_default() += 1;
                let idx = set.instances.len() - 1;
                self.collect_children(child, &ext, idx, set);
            }
        }
    }

    /// Extensions of `base` at level `q` that satisfy the NACs and whose
    /// mandatory sub-levels can be extended in turn.
    fn accepted(&self, q: QuantId, base: &Slots) -> Vec<Slots> {
        let mut out = Vec::new();
        let kind = self.rule.quantifier(q).map(|x| x.kind);
        for cand in self.candidates(q, base) {
            let ok = self
                .rule
                .children(q)
                .filter(|c| self.rule.quantifier(*c).is_some_and(|x| x.kind.requires_extension()))
                .all(|c| !self.accepted(c, &cand).is_empty());
            if ok {
                out.push(cand);
                if kind == Some(QuantKind::Exists) {
                    break;
                }
            }
        }
        out
    }

    /// Positive extensions of `base` at level `q` that pass the level's NACs,
    /// sorted by assignment.
    fn candidates(&self, q: QuantId, base: &Slots) -> Vec<Slots> {
        let Some(plan) = self.levels.get(q.index()) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        let mut slots = base.clone();
        if plan.pre.iter().all(|&e| self.edge_holds(e, &slots)) {
            let _ = self.search(plan, 0, &mut slots, &mut |s| {
                if self.nacs_hold(q, s) {
                    out.push(s.clone());
                }
                ControlFlow::Continue(())
            });
        }
        out.sort();
        out
    }

    fn nacs_hold(&self, q: QuantId, slots: &Slots) -> bool {
        let groups = self.rule.nac_groups();
        let mut disjoined = BTreeSet::new();
        for set in self.rule.disjunctions() {
            disjoined.extend(set.iter().copied());
            let at_level = set.iter().all(|&g| groups[g].level == q);
            if at_level && set.iter().all(|&g| self.group_matchable(g, slots)) {
                return false;
            }
        }
        (0..groups.len())
            .filter(|g| groups[*g].level == q && !disjoined.contains(g))
            .all(|g| !self.group_matchable(g, slots))
    }

    fn group_matchable(&self, g: usize, slots: &Slots) -> bool {
        let plan = &self.groups[g];
        let mut scratch = slots.clone();
        if !plan.pre.iter().all(|&e| self.edge_holds(e, &scratch)) {
            return false;
        }
        self.search(plan, 0, &mut scratch, &mut |_| ControlFlow::Break(()))
            .is_break()
    }

    fn search(
        &self,
        plan: &Plan,
        depth: usize,
        slots: &mut Slots,
        visit: &mut dyn FnMut(&Slots) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let Some(&node) = plan.order.get(depth) else {
            return visit(slots);
        };
        for h in self.node_candidates(node, &plan.steps[depth], slots) {
            if !self.node_fits(node, h) || !self.injective(node, h, slots) {
                continue;
            }
            slots[node.index()] = Some(h);
            if plan.steps[depth].iter().all(|&e| self.edge_holds(e, slots)) {
                self.search(plan, depth + 1, slots, visit)?;
            }
            slots[node.index()] = None;
        }
        ControlFlow::Continue(())
    }

    fn node_candidates(&self, node: RuleNodeId, closing: &[usize], slots: &Slots) -> Vec<NodeId> {
        let g = self.graph;
        for &ei in closing {
            let e = &self.rule.edges()[ei];
            let other_src = slots[e.src.index()].filter(|_| e.tgt == node && e.src != node);
            let other_tgt = slots[e.tgt.index()].filter(|_| e.src == node && e.tgt != node);
            match (&e.label, other_src, other_tgt) {
                (EdgeLabel::Plain(l), Some(s), _) => return g.successors(s, l).collect(),
                (EdgeLabel::Plain(l), None, Some(t)) => return g.predecessors(t, l).collect(),
                (EdgeLabel::Path(p), Some(s), _) => return evaluate_regex_path(g, s, p).into_iter().collect(),
                (EdgeLabel::Path(p), None, Some(t)) => {
                    return evaluate_regex_path(g, t, &p.reversed()).into_iter().collect()
                }
                _ => {}
            }
        }
        g.node_ids().collect()
    }

    fn node_fits(&self, id: RuleNodeId, h: NodeId) -> bool {
        let rn: &RuleNode = self.rule.node(id);
        let Some(host) = self.graph.node(h) else {
            return false;
        };
        if let Some(ty) = &rn.type_constraint {
            if !host.types().any(|t| self.env.is_subtype(t, ty)) {
                return false;
            }
        }
        for (flag, role) in &rn.flags {
            let ok = match role {
                Role::Reader | Role::Eraser => host.has_flag(flag),
                Role::Embargo => !host.has_flag(flag),
                Role::Creator => true,
            };
            if !ok {
                return false;
            }
        }
        for a in &rn.attrs {
            let ok = match &a.op {
                AttrOp::Match(v) => host.attr(&a.name) == Some(v),
                AttrOp::Drop => host.attr(&a.name).is_some(),
                AttrOp::Assign(_) | AttrOp::Copy { .. } => true,
            };
            if !ok {
                return false;
            }
        }
        self.required[id.index()].iter().all(|a| host.attr(a).is_some())
    }

    fn injective(&self, node: RuleNodeId, h: NodeId, slots: &Slots) -> bool {
        self.rule.neq_pairs().iter().all(|&(a, b)| {
            let other = if a == node {
                b
            } else if b == node {
                a
            } else {
                return true;
            };
            slots[other.index()] != Some(h)
        })
    }

    fn edge_holds(&self, ei: usize, slots: &Slots) -> bool {
        let e = &self.rule.edges()[ei];
        let (Some(s), Some(t)) = (slots[e.src.index()], slots[e.tgt.index()]) else {
            return false;
        };
        match &e.label {
            EdgeLabel::Plain(l) => self.graph.has_edge(s, l, t),
            EdgeLabel::Path(p) => evaluate_regex_path(self.graph, s, p).contains(&t),
        }
    }
}

/// Orders `nodes` most-constrained-first: nodes reachable from already bound
/// ones come first, then by type constraint, attribute constraints and degree,
/// ties by id.
fn make_plan(rule: &Rule, nodes: Vec<RuleNodeId>, edges: Vec<usize>) -> Plan {
    let own: BTreeSet<RuleNodeId> = nodes.iter().copied().collect();
    let degree = |n: RuleNodeId| {
        edges
            .iter()
            .filter(|&&e| rule.edges()[e].src == n || rule.edges()[e].tgt == n)
            .count()
    };
    let score = |n: RuleNodeId| {
        let x = rule.node(n);
        (
            x.type_constraint.is_some(),
            x.attrs.iter().filter(|a| matches!(a.op, AttrOp::Match(_))).count(),
            degree(n),
        )
    };
    let mut bound: BTreeSet<RuleNodeId> = BTreeSet::new();
    let is_bound = |n: RuleNodeId, bound: &BTreeSet<RuleNodeId>| !own.contains(&n) || bound.contains(&n);
    let mut order = Vec::new();
    let mut remaining: Vec<RuleNodeId> = nodes;
    while !remaining.is_empty() {
        let connected = |n: RuleNodeId| {
            edges.iter().any(|&e| {
                let e = &rule.edges()[e];
                (e.src == n && e.tgt != n && is_bound(e.tgt, &bound))
                    || (e.tgt == n && e.src != n && is_bound(e.src, &bound))
            })
        };
        let best = remaining
            .iter()
            .copied()
            .max_by(|&a, &b| (connected(a), score(a)).cmp(&(connected(b), score(b))).then(b.cmp(&a)))
            .expect("non-empty");
        remaining.retain(|&n| n != best);
        bound.insert(best);
        order.push(best);
    }
    let position = |n: RuleNodeId| order.iter().position(|&o| o == n);
    let mut pre = Vec::new();
    let mut steps = vec![Vec::new(); order.len()];
    for &ei in &edges {
        let e = &rule.edges()[ei];
        match (position(e.src), position(e.tgt)) {
            (None, None) => pre.push(ei),
            (a, b) => steps[a.max(b).expect("one endpoint is own")].push(ei),
        }
    }
    Plan { order, pre, steps }
}
