//! Rules as a single role-annotated graph.
//!
//! Every node and edge carries a [`Role`] and belongs to a quantifier level.
//! The root level is existential (one match is chosen per application); nested
//! `forall` levels apply to every extension of their parent match at once.
//! Embargo elements are partitioned into NAC groups by connectivity: an
//! embargo edge joins the groups of its embargo endpoints, reader and eraser
//! endpoints only anchor the pattern. An explicit group name may merge
//! components and names them for `disjoin`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::format::{param_slots, parse_format};
use crate::label::{Value, ValueType};
use crate::types::{TypeEnv, TypeGraph};
use crate::violation::{Location, Violation, ViolationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuantId(pub u32);

impl QuantId {
    pub const ROOT: QuantId = QuantId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleNodeId(pub u32);

impl RuleNodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Reader,
    Eraser,
    Creator,
    Embargo,
}

impl Role {
    /// Readers and erasers must be present in the host graph.
    pub fn is_positive(self) -> bool {
        matches!(self, Role::Reader | Role::Eraser)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Reader => "reader",
            Role::Eraser => "eraser",
            Role::Creator => "creator",
            Role::Embargo => "embargo",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QuantKind {
    Root,
    /// Universal; vacuously satisfied when there is no extension.
    Forall,
    /// Universal, but requires at least one extension.
    ForallNonEmpty,
    /// Existential; requires an extension and uses the first one found.
    Exists,
}

impl QuantKind {
    pub fn is_universal(self) -> bool {
        matches!(self, QuantKind::Forall | QuantKind::ForallNonEmpty)
    }

    pub fn requires_extension(self) -> bool {
        matches!(self, QuantKind::ForallNonEmpty | QuantKind::Exists)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantifier {
    pub name: String,
    pub kind: QuantKind,
    pub parent: Option<QuantId>,
    pub count_param: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrOp {
    /// The host attribute must equal the value.
    Match(Value),
    /// Write the value.
    Assign(Value),
    /// Write the pre-state value of another matched node's attribute.
    Copy { from: RuleNodeId, attr: String },
    /// The attribute must be present and is removed.
    Drop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrConstraint {
    pub name: String,
    pub op: AttrOp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleNode {
    pub name: String,
    pub role: Role,
    pub type_constraint: Option<String>,
    pub flags: Vec<(String, Role)>,
    pub attrs: Vec<AttrConstraint>,
    pub level: QuantId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PathAtom {
    pub label: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("a path needs at least one atom")]
pub struct EmptyPath;

/// A concatenation of edge labels, each followed forwards or backwards.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegexPath {
    atoms: Vec<PathAtom>,
}

impl RegexPath {
    pub fn new(atoms: Vec<PathAtom>) -> Result<Self, EmptyPath> {
        if atoms.is_empty() {
            return Err(EmptyPath);
        }
        Ok(RegexPath { atoms })
    }

    pub fn atoms(&self) -> &[PathAtom] {
        &self.atoms
    }

    /// The path read from target to source.
    pub fn reversed(&self) -> RegexPath {
        let atoms = self
            .atoms
            .iter()
            .rev()
            .map(|a| PathAtom {
                label: a.label.clone(),
                direction: match a.direction {
                    Direction::Forward => Direction::Inverse,
                    Direction::Inverse => Direction::Forward,
                },
            })
            .collect();
        RegexPath { atoms }
    }
}

impl fmt::Display for RegexPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            if a.direction == Direction::Inverse {
                f.write_str("-")?;
            }
            f.write_str(&a.label)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeLabel {
    Plain(String),
    Path(RegexPath),
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Plain(l) => f.write_str(l),
            EdgeLabel::Path(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleEdge {
    pub src: RuleNodeId,
    pub label: EdgeLabel,
    pub tgt: RuleNodeId,
    pub role: Role,
    pub level: QuantId,
    /// Explicit NAC group name.
    pub group: Option<String>,
}

/// One forbidden pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NacGroup {
    pub name: Option<String>,
    pub level: QuantId,
    pub nodes: Vec<RuleNodeId>,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("unknown NAC group `{0}`")]
    UnknownGroup(String),
    #[error("embargo pattern joins explicit groups {0:?}")]
    GroupConflict(Vec<String>),
    #[error("unknown quantifier {0:?}")]
    UnknownQuantifier(QuantId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    name: String,
    nodes: Vec<RuleNode>,
    edges: Vec<RuleEdge>,
    quantifiers: Vec<Quantifier>,
    nac_groups: Vec<NacGroup>,
    disjunctions: Vec<Vec<usize>>,
    neq: BTreeSet<(RuleNodeId, RuleNodeId)>,
    params: BTreeMap<u32, (RuleNodeId, String)>,
    print_format: Option<String>,
}

impl Rule {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[RuleNode] {
        &self.nodes
    }

    pub fn node(&self, id: RuleNodeId) -> &RuleNode {
        &self.nodes[id.index()]
    }

    pub fn node_by_name(&self, name: &str) -> Option<RuleNodeId> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .map(|i| RuleNodeId(i as u32))
    }

    pub fn edges(&self) -> &[RuleEdge] {
        &self.edges
    }

    pub fn quantifiers(&self) -> &[Quantifier] {
        &self.quantifiers
    }

    pub fn quantifier(&self, q: QuantId) -> Option<&Quantifier> {
        self.quantifiers.get(q.index())
    }

    pub fn nac_groups(&self) -> &[NacGroup] {
        &self.nac_groups
    }

    /// Disjunction sets as lists of indices into [`Rule::nac_groups`].
    pub fn disjunctions(&self) -> &[Vec<usize>] {
        &self.disjunctions
    }

    /// Injectivity pairs, each stored with the smaller id first.
    pub fn neq_pairs(&self) -> &BTreeSet<(RuleNodeId, RuleNodeId)> {
        &self.neq
    }

    pub fn must_differ(&self, a: RuleNodeId, b: RuleNodeId) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.neq.contains(&key)
    }

    pub fn params(&self) -> &BTreeMap<u32, (RuleNodeId, String)> {
        &self.params
    }

    pub fn print_format(&self) -> Option<&str> {
        self.print_format.as_deref()
    }

    /// Direct children of `q`, in id order.
    pub fn children(&self, q: QuantId) -> impl Iterator<Item = QuantId> + '_ {
        self.quantifiers
            .iter()
            .enumerate()
            .filter(move |(i, quant)| *i != q.index() && quant.parent == Some(q))
            .map(|(i, _)| QuantId(i as u32))
    }

    /// True if `anc` is `q` or one of its ancestors. Safe on malformed trees.
    pub fn is_ancestor_or_self(&self, anc: QuantId, q: QuantId) -> bool {
        let mut cur = Some(q);
        for _ in 0..=self.quantifiers.len() {
            match cur {
                Some(c) if c == anc => return true,
                Some(c) => cur = self.quantifiers.get(c.index()).and_then(|x| x.parent),
                None => return false,
            }
        }
        false
    }

    /// Nodes and edges declared at level `q`, in id order.
    pub fn level_elements(&self, q: QuantId) -> Result<(Vec<RuleNodeId>, Vec<usize>), RuleError> {
        if q.index() >= self.quantifiers.len() {
            return Err(RuleError::UnknownQuantifier(q));
        }
        let nodes = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].level == q)
            .map(|i| RuleNodeId(i as u32))
            .collect();
        let edges = (0..self.edges.len()).filter(|&i| self.edges[i].level == q).collect();
        Ok((nodes, edges))
    }

    /// Index of the NAC group an embargo node belongs to.
    pub fn group_of_node(&self, n: RuleNodeId) -> Option<usize> {
        self.nac_groups.iter().position(|g| g.nodes.contains(&n))
    }

    pub fn group_of_edge(&self, e: usize) -> Option<usize> {
        self.nac_groups.iter().position(|g| g.edges.contains(&e))
    }

    /// No element or attribute/flag operation changes the host graph.
    pub fn is_reader_only(&self) -> bool {
        self.nodes.iter().all(|n| {
            matches!(n.role, Role::Reader | Role::Embargo)
                && n.flags.iter().all(|(_, r)| matches!(r, Role::Reader | Role::Embargo))
                && n.attrs.iter().all(|a| matches!(a.op, AttrOp::Match(_)))
        }) && self
            .edges
            .iter()
            .all(|e| matches!(e.role, Role::Reader | Role::Embargo))
    }

    /// Indices of all parameters, from binds and quantifier counts.
    pub fn param_indices(&self) -> BTreeSet<u32> {
        self.params
            .keys()
            .copied()
            .chain(self.quantifiers.iter().filter_map(|q| q.count_param))
            .collect()
    }
}

/// Incremental construction of a [`Rule`]. Element references are not checked
/// here; [`validate_rule`] reports structural problems.
#[derive(Debug, Clone)]
pub struct RuleBuilder {
    rule: Rule,
    disjoin: Vec<Vec<String>>,
}

impl RuleBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        RuleBuilder {
            rule: Rule {
                name: name.into(),
                nodes: Vec::new(),
                edges: Vec::new(),
                quantifiers: vec![Quantifier {
                    name: "root".into(),
                    kind: QuantKind::Root,
                    parent: None,
                    count_param: None,
                }],
                nac_groups: Vec::new(),
                disjunctions: Vec::new(),
                neq: BTreeSet::new(),
                params: BTreeMap::new(),
                print_format: None,
            },
            disjoin: Vec::new(),
        }
    }

    pub fn quant(&mut self, name: impl Into<String>, kind: QuantKind, parent: QuantId) -> QuantId {
        let id = QuantId(self.rule.quantifiers.len() as u32);
        self.rule.quantifiers.push(Quantifier {
            name: name.into(),
            kind,
            parent: Some(parent),
            count_param: None,
        });
        id
    }

    pub fn set_parent(&mut self, q: QuantId, parent: Option<QuantId>) -> &mut Self {
        self.rule.quantifiers[q.index()].parent = parent;
        self
    }

    pub fn count(&mut self, q: QuantId, param: u32) -> &mut Self {
        self.rule.quantifiers[q.index()].count_param = Some(param);
        self
    }

    pub fn node(&mut self, name: impl Into<String>, role: Role, ty: Option<&str>, level: QuantId) -> RuleNodeId {
        let id = RuleNodeId(self.rule.nodes.len() as u32);
        self.rule.nodes.push(RuleNode {
            name: name.into(),
            role,
            type_constraint: ty.map(Into::into),
            flags: Vec::new(),
            attrs: Vec::new(),
            level,
        });
        id
    }

    fn push_edge(&mut self, src: RuleNodeId, label: EdgeLabel, tgt: RuleNodeId, role: Role, level: QuantId) -> usize {
        self.rule.edges.push(RuleEdge {
            src,
            label,
            tgt,
            role,
            level,
            group: None,
        });
        self.rule.edges.len() - 1
    }

    pub fn edge(&mut self, src: RuleNodeId, label: &str, tgt: RuleNodeId, role: Role, level: QuantId) -> usize {
        self.push_edge(src, EdgeLabel::Plain(label.into()), tgt, role, level)
    }

    pub fn path(&mut self, src: RuleNodeId, path: RegexPath, tgt: RuleNodeId, role: Role, level: QuantId) -> usize {
        self.push_edge(src, EdgeLabel::Path(path), tgt, role, level)
    }

    pub fn group(&mut self, edge: usize, group: impl Into<String>) -> &mut Self {
        self.rule.edges[edge].group = Some(group.into());
        self
    }

    pub fn flag(&mut self, node: RuleNodeId, role: Role, flag: impl Into<String>) -> &mut Self {
        self.rule.nodes[node.index()].flags.push((flag.into(), role));
        self
    }

    pub fn attr(&mut self, node: RuleNodeId, name: impl Into<String>, op: AttrOp) -> &mut Self {
        self.rule.nodes[node.index()]
            .attrs
            .push(AttrConstraint { name: name.into(), op });
        self
    }

    /// Binds parameter `index` to an attribute; returns the displaced binding.
    pub fn bind(&mut self, index: u32, node: RuleNodeId, attr: impl Into<String>) -> Option<(RuleNodeId, String)> {
        self.rule.params.insert(index, (node, attr.into()))
    }

    /// Declares the nodes pairwise distinct.
    pub fn neq(&mut self, nodes: &[RuleNodeId]) -> &mut Self {
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                if a != b {
                    self.rule.neq.insert(if a < b { (a, b) } else { (b, a) });
                }
            }
        }
        self
    }

    pub fn disjoin<S: AsRef<str>>(&mut self, groups: &[S]) -> &mut Self {
        self.disjoin.push(groups.iter().map(|g| g.as_ref().into()).collect());
        self
    }

    pub fn format(&mut self, fmt: impl Into<String>) -> &mut Self {
        self.rule.print_format = Some(fmt.into());
        self
    }

    pub fn build(mut self) -> Result<Rule, RuleError> {
        let n_nodes = self.rule.nodes.len();
        let n_edges = self.rule.edges.len();
        let mut names: Vec<String> = self
            .rule
            .edges
            .iter()
            .filter(|e| e.role == Role::Embargo)
            .filter_map(|e| e.group.clone())
            .collect();
        names.sort();
        names.dedup();

        // union-find over nodes, edges and explicit group names
        let mut uf = UnionFind::new(n_nodes + n_edges + names.len());
        let is_embargo_node = |r: &Rule, n: RuleNodeId| r.nodes.get(n.index()).is_some_and(|x| x.role == Role::Embargo);
        for (i, e) in self.rule.edges.iter().enumerate() {
            if e.role != Role::Embargo {
                continue;
            }
            for end in [e.src, e.tgt] {
                if is_embargo_node(&self.rule, end) {
                    uf.union(n_nodes + i, end.index());
                }
            }
            if let Some(g) = &e.group {
                let k = names.binary_search(g).expect("collected above");
                uf.union(n_nodes + i, n_nodes + n_edges + k);
            }
        }

        let mut groups: Vec<NacGroup> = Vec::new();
        let mut group_names: Vec<BTreeSet<String>> = Vec::new();
        let mut by_root: BTreeMap<usize, usize> = BTreeMap::new();
        let mut slot = |root: usize, level: QuantId, groups: &mut Vec<NacGroup>, gn: &mut Vec<BTreeSet<String>>| {
            *by_root.entry(root).or_insert_with(|| {
                groups.push(NacGroup {
                    name: None,
                    level,
                    nodes: Vec::new(),
                    edges: Vec::new(),
                });
                gn.push(BTreeSet::new());
                groups.len() - 1
            })
        };
        for i in 0..n_nodes {
            if self.rule.nodes[i].role == Role::Embargo {
                let g = slot(uf.find(i), self.rule.nodes[i].level, &mut groups, &mut group_names);
                groups[g].nodes.push(RuleNodeId(i as u32));
            }
        }
        for i in 0..n_edges {
            let e = &self.rule.edges[i];
            if e.role == Role::Embargo {
                let g = slot(uf.find(n_nodes + i), e.level, &mut groups, &mut group_names);
                groups[g].edges.push(i);
                if let Some(name) = &e.group {
                    group_names[g].insert(name.clone());
                }
            }
        }
        for (g, set) in groups.iter_mut().zip(&group_names) {
            if set.len() > 1 {
                return Err(RuleError::GroupConflict(set.iter().cloned().collect()));
            }
            g.name = set.iter().next().cloned();
        }

        let mut disjunctions = Vec::new();
        for set in &self.disjoin {
            let mut ids = Vec::new();
            for name in set {
                let idx = groups
                    .iter()
                    .position(|g| g.name.as_deref() == Some(name.as_str()))
                    .ok_or_else(|| RuleError::UnknownGroup(name.clone()))?;
                ids.push(idx);
            }
            disjunctions.push(ids);
        }
        self.rule.nac_groups = groups;
        self.rule.disjunctions = disjunctions;
        Ok(self.rule)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Structural and typing problems of a rule. The result is sorted, so it does
/// not depend on the order in which checks run.
pub fn validate_rule(r: &Rule, tgs: Option<&[TypeGraph]>) -> Vec<Violation> {
    let mut v = Vec::new();
    check_quantifiers(r, &mut v);
    check_nodes(r, &mut v);
    check_edges(r, &mut v);
    check_params(r, &mut v);
    check_groups(r, &mut v);
    check_format(r, &mut v);
    if let Some(tgs) = tgs.filter(|t| !t.is_empty()) {
        check_types(r, tgs, &mut v);
    }
    v.sort();
    v.dedup();
    v
}

fn level_ok(r: &Rule, q: QuantId) -> bool {
    q.index() < r.quantifiers.len()
}

fn node_ok(r: &Rule, n: RuleNodeId) -> bool {
    n.index() < r.nodes.len()
}

fn check_quantifiers(r: &Rule, v: &mut Vec<Violation>) {
    for (i, q) in r.quantifiers.iter().enumerate() {
        let id = QuantId(i as u32);
        let loc = Location::Quantifier(id);
        if i == 0 {
            if q.kind != QuantKind::Root || q.parent.is_some() {
                v.push(Violation::new(
                    loc,
                    ViolationKind::QuantifierTree,
                    "the first quantifier must be the root",
                ));
            }
            continue;
        }
        if q.kind == QuantKind::Root {
            v.push(Violation::new(
                loc.clone(),
                ViolationKind::QuantifierTree,
                format!("quantifier `{}` cannot be a second root", q.name),
            ));
        }
        match q.parent {
            None => v.push(Violation::new(
                loc,
                ViolationKind::QuantifierTree,
                format!("quantifier `{}` has no parent", q.name),
            )),
            Some(p) if !level_ok(r, p) => v.push(Violation::new(
                loc,
                ViolationKind::UnknownLevel,
                format!("quantifier `{}` has unknown parent", q.name),
            )),
            Some(_) => {
                if !r.is_ancestor_or_self(QuantId::ROOT, id) {
                    v.push(Violation::new(
                        loc,
                        ViolationKind::QuantifierTree,
                        format!("quantifier `{}` is on a parent cycle", q.name),
                    ));
                }
            }
        }
    }
}

fn check_nodes(r: &Rule, v: &mut Vec<Violation>) {
    for (i, n) in r.nodes.iter().enumerate() {
        let id = RuleNodeId(i as u32);
        let loc = || Location::RuleNode(id);
        if !level_ok(r, n.level) {
            v.push(Violation::new(
                loc(),
                ViolationKind::UnknownLevel,
                format!("node `{}` has an unknown level", n.name),
            ));
            continue;
        }
        for (flag, role) in &n.flags {
            let bad = match n.role {
                Role::Creator => matches!(role, Role::Eraser | Role::Embargo),
                Role::Embargo => matches!(role, Role::Eraser | Role::Creator),
                _ => false,
            };
            if bad {
                v.push(Violation::new(
                    loc(),
                    ViolationKind::RoleRestriction,
                    format!("{} node `{}` cannot have {role} flag `{flag}`", n.role, n.name),
                ));
            }
        }
        for a in &n.attrs {
            let bad = matches!(
                (&a.op, n.role),
                (AttrOp::Match(_) | AttrOp::Drop, Role::Creator)
                    | (AttrOp::Assign(_) | AttrOp::Copy { .. } | AttrOp::Drop, Role::Embargo)
            );
            if bad {
                v.push(Violation::new(
                    loc(),
                    ViolationKind::RoleRestriction,
                    format!(
                        "{} node `{}` cannot carry this operation on `{}`",
                        n.role, n.name, a.name
                    ),
                ));
            }
            if let AttrOp::Copy { from, attr } = &a.op {
                if !node_ok(r, *from) {
                    v.push(Violation::new(
                        loc(),
                        ViolationKind::UnresolvedReference,
                        "copy from unknown node",
                    ));
                    continue;
                }
                let src = r.node(*from);
                if !src.role.is_positive() || !r.is_ancestor_or_self(src.level, n.level) {
                    v.push(Violation::new(
                        loc(),
                        ViolationKind::LevelScope,
                        format!(
                            "`{}.{}` copies `{}.{attr}`, which is not a matched node in scope",
                            n.name, a.name, src.name
                        ),
                    ));
                }
            }
        }
    }
    for (a, b) in &r.neq {
        for n in [a, b] {
            if node_ok(r, *n) && r.node(*n).role == Role::Creator {
                v.push(Violation::new(
                    Location::RuleNode(*n),
                    ViolationKind::RoleRestriction,
                    format!(
                        "creator node `{}` cannot take part in an injectivity constraint",
                        r.node(*n).name
                    ),
                ));
            }
        }
    }
}

fn check_edges(r: &Rule, v: &mut Vec<Violation>) {
    for (i, e) in r.edges.iter().enumerate() {
        let loc = || Location::RuleEdge(i);
        if !level_ok(r, e.level) {
            v.push(Violation::new(
                loc(),
                ViolationKind::UnknownLevel,
                "edge has an unknown level",
            ));
            continue;
        }
        if !node_ok(r, e.src) || !node_ok(r, e.tgt) {
            v.push(Violation::new(
                loc(),
                ViolationKind::UnresolvedReference,
                "edge refers to an unknown node",
            ));
            continue;
        }
        if matches!(e.label, EdgeLabel::Path(_)) && !matches!(e.role, Role::Reader | Role::Embargo) {
            v.push(Violation::new(
                loc(),
                ViolationKind::PathRole,
                format!("path `{}` cannot be a {} edge", e.label, e.role),
            ));
        }
        for end in [e.src, e.tgt] {
            let n = r.node(end);
            if !r.is_ancestor_or_self(n.level, e.level) {
                v.push(Violation::new(
                    loc(),
                    ViolationKind::LevelScope,
                    format!(
                        "edge `{}` reaches node `{}` outside its quantifier scope",
                        e.label, n.name
                    ),
                ));
            }
            let ok = match e.role {
                Role::Reader | Role::Eraser => n.role.is_positive(),
                Role::Creator => matches!(n.role, Role::Reader | Role::Creator),
                Role::Embargo => n.role != Role::Creator,
            };
            if !ok {
                v.push(Violation::new(
                    loc(),
                    ViolationKind::RoleRestriction,
                    format!(
                        "{} edge `{}` cannot attach to {} node `{}`",
                        e.role, e.label, n.role, n.name
                    ),
                ));
            }
        }
    }
}

fn check_params(r: &Rule, v: &mut Vec<Violation>) {
    let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
    for &idx in r.params.keys() {
        *seen.entry(idx).or_default() += 1;
    }
    for (i, q) in r.quantifiers.iter().enumerate() {
        let Some(idx) = q.count_param else { continue };
        *seen.entry(idx).or_default() += 1;
        if !q.kind.is_universal() {
            v.push(Violation::new(
                Location::Quantifier(QuantId(i as u32)),
                ViolationKind::CountParam,
                format!("only universal quantifiers can report a count (`{}`)", q.name),
            ));
        }
    }
    for (&idx, &uses) in &seen {
        if uses > 1 {
            v.push(Violation::new(
                Location::Param(idx),
                ViolationKind::CountParam,
                format!("parameter {idx} is bound more than once; a count parameter must hold only the count"),
            ));
        }
    }
    for (expected, &idx) in seen.keys().enumerate() {
        if idx as usize != expected {
            v.push(Violation::new(
                Location::Param(idx),
                ViolationKind::ParamIndex,
                format!("parameter indices must be dense from 0; found {idx} where {expected} was expected"),
            ));
            break;
        }
    }
    for (&idx, (node, attr)) in &r.params {
        if !node_ok(r, *node) {
            v.push(Violation::new(
                Location::Param(idx),
                ViolationKind::UnresolvedReference,
                "parameter bound to unknown node",
            ));
            continue;
        }
        let n = r.node(*node);
        if n.level != QuantId::ROOT || n.role == Role::Embargo {
            v.push(Violation::new(
                Location::Param(idx),
                ViolationKind::ParamIndex,
                format!("parameter {idx} must be bound on a root-level matched or created node"),
            ));
        }
        if n.role == Role::Creator
            && !n
                .attrs
                .iter()
                .any(|a| a.name == *attr && matches!(a.op, AttrOp::Assign(_) | AttrOp::Copy { .. }))
        {
            v.push(Violation::new(
                Location::Param(idx),
                ViolationKind::ParamIndex,
                format!(
                    "parameter {idx} reads `{}.{attr}`, which the creator node never sets",
                    n.name
                ),
            ));
        }
    }
}

fn check_groups(r: &Rule, v: &mut Vec<Violation>) {
    for (gi, g) in r.nac_groups.iter().enumerate() {
        let levels: BTreeSet<QuantId> = g
            .nodes
            .iter()
            .filter(|n| node_ok(r, **n))
            .map(|n| r.node(*n).level)
            .chain(g.edges.iter().filter_map(|e| r.edges.get(*e)).map(|e| e.level))
            .collect();
        if levels.len() > 1 {
            v.push(Violation::new(
                Location::Group(gi),
                ViolationKind::NacGroup,
                "a NAC group spans several quantifier levels",
            ));
        }
    }
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for (di, set) in r.disjunctions.iter().enumerate() {
        let distinct: BTreeSet<usize> = set.iter().copied().collect();
        if distinct.len() < 2 {
            v.push(Violation::new(
                Location::Disjunction(di),
                ViolationKind::Disjunction,
                "a disjunction needs at least two distinct NAC groups",
            ));
        }
        let levels: BTreeSet<QuantId> = distinct
            .iter()
            .filter_map(|g| r.nac_groups.get(*g))
            .map(|g| g.level)
            .collect();
        if levels.len() > 1 {
            v.push(Violation::new(
                Location::Disjunction(di),
                ViolationKind::Disjunction,
                "disjoined NAC groups must share a quantifier level",
            ));
        }
        for g in distinct {
            if let Some(prev) = owner.insert(g, di) {
                if prev != di {
                    v.push(Violation::new(
                        Location::Disjunction(di),
                        ViolationKind::Disjunction,
                        "a NAC group may belong to at most one disjunction",
                    ));
                }
            }
        }
    }
}

fn check_format(r: &Rule, v: &mut Vec<Violation>) {
    let Some(fmt) = &r.print_format else { return };
    match parse_format(fmt) {
        Err(e) => v.push(Violation::new(Location::Format, ViolationKind::Format, format!("{e}"))),
        Ok(segs) => {
            let wanted = param_slots(&segs);
            let available = r.param_indices().len();
            if wanted > available {
                v.push(Violation::new(
                    Location::Format,
                    ViolationKind::Format,
                    format!("format uses {wanted} `%s` but the rule has {available} parameter(s)"),
                ));
            }
        }
    }
}

fn check_types(r: &Rule, tgs: &[TypeGraph], v: &mut Vec<Violation>) {
    let env = TypeEnv::new(tgs);
    for (i, n) in r.nodes.iter().enumerate() {
        let loc = || Location::RuleNode(RuleNodeId(i as u32));
        let Some(ty) = &n.type_constraint else { continue };
        let declaring: Vec<&TypeGraph> = tgs.iter().filter(|tg| tg.declares(ty)).collect();
        if declaring.is_empty() {
            v.push(Violation::new(
                loc(),
                ViolationKind::Unlicensed,
                format!("node `{}` has undeclared type `{ty}`", n.name),
            ));
            continue;
        }
        if n.role == Role::Creator && declaring.iter().all(|tg| tg.get(ty).is_some_and(|d| d.is_abstract)) {
            v.push(Violation::new(
                loc(),
                ViolationKind::AbstractInstance,
                format!("creator node `{}` instantiates abstract type `{ty}`", n.name),
            ));
        }
        for a in &n.attrs {
            let declared: Vec<ValueType> = tgs
                .iter()
                .flat_map(|tg| {
                    tg.types()
                        .filter(|d| env.comparable(&d.name, ty))
                        .filter_map(|d| d.attrs.get(&a.name).copied())
                })
                .collect();
            if declared.is_empty() {
                v.push(Violation::new(
                    loc(),
                    ViolationKind::Unlicensed,
                    format!("type `{ty}` declares no attribute `{}`", a.name),
                ));
                continue;
            }
            let literal = match &a.op {
                AttrOp::Match(x) | AttrOp::Assign(x) => Some(x.value_type()),
                _ => None,
            };
            if let Some(lt) = literal {
                if !declared.contains(&lt) {
                    v.push(Violation::new(
                        loc(),
                        ViolationKind::AttrTypeMismatch,
                        format!("`{}.{}` is declared {}, given a {lt}", n.name, a.name, declared[0]),
                    ));
                }
            }
        }
    }
    for (i, e) in r.edges.iter().enumerate() {
        let EdgeLabel::Plain(label) = &e.label else { continue };
        if !node_ok(r, e.src) || !node_ok(r, e.tgt) {
            continue;
        }
        let (s, t) = (&r.node(e.src).type_constraint, &r.node(e.tgt).type_constraint);
        let fits = |decl: &str, end: &Option<String>| end.as_deref().is_none_or(|ty| env.comparable(ty, decl));
        let licensed = tgs.iter().any(|tg| {
            tg.edge_decls()
                .iter()
                .any(|d| d.label == *label && fits(&d.src, s) && fits(&d.tgt, t))
        });
        if !licensed {
            v.push(Violation::new(
                Location::RuleEdge(i),
                ViolationKind::Unlicensed,
                format!("edge label `{label}` is not licensed between these node types"),
            ));
        }
    }
}
