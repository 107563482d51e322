//! Host graphs: simple directed graphs with typed, flagged, attributed nodes.
//!
//! Edges have no identity of their own; an edge *is* its `(source, label,
//! target)` triple, so inserting an existing triple is a no-op. Deleting a node
//! removes every incident edge (single-pushout behaviour).
//!
//! Equality on [`HostGraph`] compares node ids, labels, attributes and edges.
//! It is sensitive to node ids; use [`crate::explore::isomorphic`] to compare
//! graphs up to renaming.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::label::{check_name, Label, LabelKind, NameError, Value};

/// Opaque node identifier. Ids are assigned monotonically and never reused
/// within one graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    /// An id with the given raw value; it names a node only in a graph that
    /// assigned it.
    pub fn from_raw(raw: u32) -> Self {
        NodeId(raw)
    }

    pub fn raw(self) -> u32 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("label `{label}` is a {found}, expected a {expected}")]
    KindMismatch {
        label: String,
        expected: LabelKind,
        found: LabelKind,
    },
    #[error("no node {0} in graph")]
    MissingNode(NodeId),
    #[error(transparent)]
    Name(#[from] NameError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HostNode {
    types: BTreeSet<String>,
    flags: BTreeSet<String>,
    attrs: BTreeMap<String, Value>,
}

impl HostNode {
    pub fn types(&self) -> impl Iterator<Item = &str> + '_ {
        self.types.iter().map(String::as_str)
    }

    pub fn flags(&self) -> impl Iterator<Item = &str> + '_ {
        self.flags.iter().map(String::as_str)
    }

    pub fn has_type(&self, name: &str) -> bool {
        self.types.contains(name)
    }

    pub fn has_flag(&self, name: &str) -> bool {
        self.flags.contains(name)
    }

    pub fn attrs(&self) -> &BTreeMap<String, Value> {
        &self.attrs
    }

    pub fn attr(&self, name: &str) -> Option<&Value> {
        self.attrs.get(name)
    }
}

/// A host edge triple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub src: NodeId,
    pub label: String,
    pub tgt: NodeId,
}

impl Edge {
    pub fn new(src: NodeId, label: impl Into<String>, tgt: NodeId) -> Self {
        Edge {
            src,
            label: label.into(),
            tgt,
        }
    }
}

type Adjacency = BTreeMap<NodeId, BTreeMap<String, BTreeSet<NodeId>>>;

#[derive(Debug, Clone, Default)]
pub struct HostGraph {
    name: String,
    nodes: BTreeMap<NodeId, HostNode>,
    out: Adjacency,
    inc: Adjacency,
    edge_count: usize,
    names: BTreeMap<NodeId, String>,
    next: u32,
}

impl PartialEq for HostGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edge_count == other.edge_count && self.out == other.out
    }
}

impl Eq for HostGraph {}

fn expect_kind(label: &Label, expected: LabelKind) -> Result<(), GraphError> {
    if label.kind() == expected {
        Ok(())
    } else {
        Err(GraphError::KindMismatch {
            label: label.name().into(),
            expected,
            found: label.kind(),
        })
    }
}

impl HostGraph {
    pub fn new(name: impl Into<String>) -> Self {
        HostGraph {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn node(&self, id: NodeId) -> Option<&HostNode> {
        self.nodes.get(&id)
    }

    /// Node ids in ascending order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &HostNode)> + '_ {
        self.nodes.iter().map(|(id, n)| (*id, n))
    }

    /// All edges, ordered by `(src, label, tgt)`.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, &str, NodeId)> + '_ {
        self.out.iter().flat_map(|(src, by_label)| {
            by_label
                .iter()
                .flat_map(move |(label, tgts)| tgts.iter().map(move |t| (*src, label.as_str(), *t)))
        })
    }

    pub fn has_edge(&self, src: NodeId, label: &str, tgt: NodeId) -> bool {
        self.out
            .get(&src)
            .and_then(|m| m.get(label))
            .is_some_and(|s| s.contains(&tgt))
    }

    /// Targets of `label`-edges leaving `src`.
    pub fn successors<'a>(&'a self, src: NodeId, label: &str) -> impl Iterator<Item = NodeId> + 'a {
        self.out
            .get(&src)
            .and_then(|m| m.get(label))
            .into_iter()
            .flatten()
            .copied()
    }

    /// Sources of `label`-edges entering `tgt`.
    pub fn predecessors<'a>(&'a self, tgt: NodeId, label: &str) -> impl Iterator<Item = NodeId> + 'a {
        self.inc
            .get(&tgt)
            .and_then(|m| m.get(label))
            .into_iter()
            .flatten()
            .copied()
    }

    /// Outgoing `(label, target)` pairs of `n`.
    pub fn out_edges(&self, n: NodeId) -> impl Iterator<Item = (&str, NodeId)> + '_ {
        self.out
            .get(&n)
            .into_iter()
            .flat_map(|m| m.iter().flat_map(|(l, ts)| ts.iter().map(move |t| (l.as_str(), *t))))
    }

    /// Incoming `(label, source)` pairs of `n`.
    pub fn in_edges(&self, n: NodeId) -> impl Iterator<Item = (&str, NodeId)> + '_ {
        self.inc
            .get(&n)
            .into_iter()
            .flat_map(|m| m.iter().flat_map(|(l, ss)| ss.iter().map(move |s| (l.as_str(), *s))))
    }

    pub fn add_node(&mut self, types: &[Label], flags: &[Label]) -> Result<NodeId, GraphError> {
        for t in types {
            expect_kind(t, LabelKind::NodeType)?;
        }
        for f in flags {
            expect_kind(f, LabelKind::Flag)?;
        }
        let node = HostNode {
            types: types.iter().map(|l| l.name().into()).collect(),
            flags: flags.iter().map(|l| l.name().into()).collect(),
            attrs: BTreeMap::new(),
        };
        Ok(self.insert_node(node))
    }

    pub(crate) fn insert_node(&mut self, node: HostNode) -> NodeId {
        let id = NodeId(self.next);
        self.next += 1;
        self.nodes.insert(id, node);
        id
    }

    pub(crate) fn insert_raw_node(
        &mut self,
        types: BTreeSet<String>,
        flags: BTreeSet<String>,
        attrs: BTreeMap<String, Value>,
    ) -> NodeId {
        self.insert_node(HostNode { types, flags, attrs })
    }

    /// Inserts an edge; returns `false` if the triple was already present.
    pub fn add_edge(&mut self, src: NodeId, label: &Label, tgt: NodeId) -> Result<bool, GraphError> {
        expect_kind(label, LabelKind::EdgeLabel)?;
        self.insert_edge(src, label.name(), tgt)
    }

    pub(crate) fn insert_edge(&mut self, src: NodeId, label: &str, tgt: NodeId) -> Result<bool, GraphError> {
        for n in [src, tgt] {
            if !self.nodes.contains_key(&n) {
                return Err(GraphError::MissingNode(n));
            }
        }
        let fresh = self
            .out
            .entry(src)
            .or_default()
            .entry(label.into())
            .or_default()
            .insert(tgt);
        if fresh {
            self.inc
                .entry(tgt)
                .or_default()
                .entry(label.into())
                .or_default()
                .insert(src);
            self.edge_count += 1;
        }
        Ok(fresh)
    }

    /// Removes an edge; returns whether it was present.
    pub fn remove_edge(&mut self, src: NodeId, label: &str, tgt: NodeId) -> bool {
        let removed = remove_from(&mut self.out, src, label, tgt);
        if removed {
            remove_from(&mut self.inc, tgt, label, src);
            self.edge_count -= 1;
        }
        removed
    }

    fn node_mut(&mut self, n: NodeId) -> Result<&mut HostNode, GraphError> {
        self.nodes.get_mut(&n).ok_or(GraphError::MissingNode(n))
    }

    /// Sets an attribute, returning the displaced value.
    pub fn set_attr(&mut self, n: NodeId, name: &str, value: Value) -> Result<Option<Value>, GraphError> {
        check_name(name)?;
        Ok(self.node_mut(n)?.attrs.insert(name.into(), value))
    }

    pub fn attr(&self, n: NodeId, name: &str) -> Option<&Value> {
        self.nodes.get(&n).and_then(|node| node.attrs.get(name))
    }

    pub fn remove_attr(&mut self, n: NodeId, name: &str) -> Result<Option<Value>, GraphError> {
        Ok(self.node_mut(n)?.attrs.remove(name))
    }

    pub fn add_type(&mut self, n: NodeId, ty: &Label) -> Result<bool, GraphError> {
        expect_kind(ty, LabelKind::NodeType)?;
        Ok(self.node_mut(n)?.types.insert(ty.name().into()))
    }

    pub fn add_flag(&mut self, n: NodeId, flag: &Label) -> Result<bool, GraphError> {
        expect_kind(flag, LabelKind::Flag)?;
        Ok(self.node_mut(n)?.flags.insert(flag.name().into()))
    }

    pub(crate) fn set_flag(&mut self, n: NodeId, flag: &str, present: bool) {
        if let Some(node) = self.nodes.get_mut(&n) {
            if present {
                node.flags.insert(flag.into());
            } else {
                node.flags.remove(flag);
            }
        }
    }

    pub fn remove_flag(&mut self, n: NodeId, flag: &str) -> Result<bool, GraphError> {
        Ok(self.node_mut(n)?.flags.remove(flag))
    }

    /// Deletes `n` together with every incident edge. Returns the number of
    /// edges removed; a self-loop counts once.
    pub fn delete_node_spo(&mut self, n: NodeId) -> Result<usize, GraphError> {
        if !self.nodes.contains_key(&n) {
            return Err(GraphError::MissingNode(n));
        }
        let mut incident: BTreeSet<(NodeId, String, NodeId)> = BTreeSet::new();
        for (l, t) in self.out_edges(n) {
            incident.insert((n, l.into(), t));
        }
        for (l, s) in self.in_edges(n) {
            incident.insert((s, l.into(), n));
        }
        for (s, l, t) in &incident {
            self.remove_edge(*s, l, *t);
        }
        self.out.remove(&n);
        self.inc.remove(&n);
        self.nodes.remove(&n);
        self.names.remove(&n);
        Ok(incident.len())
    }

    /// The name the node carried in its source text, if any.
    pub fn node_name(&self, n: NodeId) -> Option<&str> {
        self.names.get(&n).map(String::as_str)
    }

    pub fn set_node_name(&mut self, n: NodeId, name: impl Into<String>) -> Result<(), GraphError> {
        if !self.nodes.contains_key(&n) {
            return Err(GraphError::MissingNode(n));
        }
        self.names.insert(n, name.into());
        Ok(())
    }

    /// Edges whose endpoints are missing from the node map. Always empty for
    /// graphs built through this API; exposed for full-scan checks.
    pub fn dangling_edges(&self) -> Vec<Edge> {
        self.edges()
            .filter(|(s, _, t)| !self.nodes.contains_key(s) || !self.nodes.contains_key(t))
            .map(|(s, l, t)| Edge::new(s, l, t))
            .collect()
    }
}

fn remove_from(adj: &mut Adjacency, a: NodeId, label: &str, b: NodeId) -> bool {
    let Some(by_label) = adj.get_mut(&a) else {
        return false;
    };
    let Some(set) = by_label.get_mut(label) else {
        return false;
    };
    let removed = set.remove(&b);
    if set.is_empty() {
        by_label.remove(label);
    }
    if by_label.is_empty() {
        adj.remove(&a);
    }
    removed
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ty(n: &str) -> Label {
        Label::node_type(n).unwrap()
    }

    fn el(n: &str) -> Label {
        Label::edge(n).unwrap()
    }

    #[test]
    fn first_node_in_empty_graph() {
        let mut g = HostGraph::new("g");
        let n = g.add_node(&[ty("Node")], &[]).unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(g.node(n).unwrap().has_type("Node"));
    }

    #[test]
    fn fresh_ids_are_distinct() {
        let mut g = HostGraph::new("g");
        let ids: Vec<_> = (0..3).map(|_| g.add_node(&[ty("Node")], &[]).unwrap()).collect();
        let n = g.add_node(&[ty("Greeting")], &[]).unwrap();
        assert!(!ids.contains(&n));
        // ids are not reused after deletion either
        g.delete_node_spo(n).unwrap();
        let m = g.add_node(&[], &[]).unwrap();
        assert_ne!(m, n);
    }

    #[test]
    fn flag_only_node() {
        let mut g = HostGraph::new("g");
        let n = g.add_node(&[], &[Label::flag("marked").unwrap()]).unwrap();
        let node = g.node(n).unwrap();
        assert_eq!(node.types().count(), 0);
        assert!(node.has_flag("marked"));
    }

    #[test]
    fn wrong_label_kind() {
        let mut g = HostGraph::new("g");
        let err = g.add_node(&[Label::flag("f").unwrap()], &[]).unwrap_err();
        assert!(matches!(err, GraphError::KindMismatch { .. }));
        let a = g.add_node(&[], &[]).unwrap();
        assert!(g.add_edge(a, &ty("Node"), a).is_err());
    }

    #[test]
    fn duplicate_edge_is_idempotent() {
        let mut g = HostGraph::new("g");
        let a = g.add_node(&[], &[]).unwrap();
        let b = g.add_node(&[], &[]).unwrap();
        assert!(g.add_edge(a, &el("src"), b).unwrap());
        let before = g.clone();
        assert!(!g.add_edge(a, &el("src"), b).unwrap());
        assert_eq!(g, before);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn self_loops_and_missing_endpoints() {
        let mut g = HostGraph::new("g");
        let a = g.add_node(&[], &[]).unwrap();
        assert!(g.add_edge(a, &el("loop"), a).unwrap());
        let ghost = g.add_node(&[], &[]).unwrap();
        g.delete_node_spo(ghost).unwrap();
        assert_eq!(g.add_edge(a, &el("x"), ghost), Err(GraphError::MissingNode(ghost)));
    }

    #[test]
    fn attributes_overwrite() {
        let mut g = HostGraph::new("g");
        let n = g.add_node(&[], &[]).unwrap();
        assert_eq!(g.set_attr(n, "text", "Hello".into()).unwrap(), None);
        assert_eq!(g.attr(n, "text"), Some(&Value::from("Hello")));
        assert_eq!(
            g.set_attr(n, "text", "World".into()).unwrap(),
            Some(Value::from("Hello"))
        );
        assert_eq!(g.set_attr(n, "count", Value::Int(0)).unwrap(), None);
        assert_eq!(g.attr(n, "count"), Some(&Value::Int(0)));
    }

    #[test]
    fn spo_delete_counts_incident_edges() {
        let mut g = HostGraph::new("g");
        let e = g.add_node(&[ty("Edge")], &[]).unwrap();
        let a = g.add_node(&[ty("Node")], &[]).unwrap();
        let b = g.add_node(&[ty("Node")], &[]).unwrap();
        g.add_edge(e, &el("src"), a).unwrap();
        g.add_edge(e, &el("trg"), a).unwrap();
        g.add_edge(e, &el("src"), b).unwrap();
        assert_eq!(g.delete_node_spo(a).unwrap(), 2);
        assert!(g.dangling_edges().is_empty());
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.delete_node_spo(b).unwrap(), 1);
        let lone = g.add_node(&[], &[]).unwrap();
        assert_eq!(g.delete_node_spo(lone).unwrap(), 0);
        assert_eq!(g.delete_node_spo(lone), Err(GraphError::MissingNode(lone)));
    }

    #[test]
    fn spo_delete_counts_loop_once() {
        let mut g = HostGraph::new("g");
        let a = g.add_node(&[], &[]).unwrap();
        let b = g.add_node(&[], &[]).unwrap();
        g.add_edge(a, &el("l"), a).unwrap();
        g.add_edge(a, &el("x"), b).unwrap();
        assert_eq!(g.delete_node_spo(a).unwrap(), 2);
        assert_eq!(g.edge_count(), 0);
    }

    #[derive(Debug, Clone)]
    enum Op {
        Node,
        Edge(usize, u8, usize),
        Delete(usize),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            2 => Just(Op::Node),
            4 => (0..8usize, 0..3u8, 0..8usize).prop_map(|(a, l, b)| Op::Edge(a, l, b)),
            1 => (0..8usize).prop_map(Op::Delete),
        ]
    }

    proptest! {
        #[test]
        fn no_dangling_references_after_any_sequence(ops in proptest::collection::vec(op(), 0..60)) {
            let mut g = HostGraph::new("g");
            let labels = [el("a"), el("b"), el("c")];
            for op in ops {
                let ids: Vec<NodeId> = g.node_ids().collect();
                match op {
                    Op::Node => { g.add_node(&[], &[]).unwrap(); }
                    Op::Edge(a, l, b) if !ids.is_empty() => {
                        let (s, t) = (ids[a % ids.len()], ids[b % ids.len()]);
                        let had = g.has_edge(s, labels[l as usize].name(), t);
                        let before = g.clone();
                        let fresh = g.add_edge(s, &labels[l as usize], t).unwrap();
                        prop_assert_eq!(fresh, !had);
                        if had { prop_assert_eq!(&g, &before); }
                    }
                    Op::Delete(a) if !ids.is_empty() => {
                        let n = ids[a % ids.len()];
                        g.delete_node_spo(n).unwrap();
                        prop_assert!(g.edges().all(|(s, _, t)| s != n && t != n));
                    }
                    _ => {}
                }
                prop_assert!(g.dangling_edges().is_empty());
                prop_assert_eq!(g.edges().count(), g.edge_count());
                let incoming: usize = g.node_ids().map(|n| g.in_edges(n).count()).sum();
                prop_assert_eq!(incoming, g.edge_count());
            }
        }
    }
}
