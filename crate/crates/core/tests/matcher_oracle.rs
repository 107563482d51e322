//! The matcher against exhaustive enumeration of all node assignments.

use std::collections::BTreeSet;

use gtx_core::graph::{HostGraph, NodeId};
use gtx_core::label::Label;
use gtx_core::matcher::{collect_level_matches, evaluate_regex_path, find_root_matches, Match};
use gtx_core::rule::{Direction, PathAtom, QuantId, QuantKind, RegexPath, Role, RuleBuilder, RuleNodeId};
use gtx_core::types::TypeEnv;
use proptest::prelude::*;

const TYPES: [Option<&str>; 3] = [None, Some("A"), Some("B")];
const LABELS: [&str; 2] = ["p", "q"];

#[derive(Debug, Clone)]
struct Host {
    types: Vec<usize>,
    edges: Vec<(usize, usize, usize)>,
}

/// Source node, path atoms `(label, inverse)`, target node.
type PathSpec = (usize, Vec<(usize, bool)>, usize);

#[derive(Debug, Clone)]
struct Pattern {
    types: Vec<usize>,
    edges: Vec<(usize, usize, usize)>,
    /// Reader path between two pattern nodes.
    path: Option<PathSpec>,
    /// Forbidden edge between two pattern nodes.
    nac_edge: Option<(usize, usize, usize)>,
    /// Forbidden incoming edge from any node.
    nac_incoming: Option<(usize, usize)>,
    /// Forbidden path between two pattern nodes.
    nac_path: Option<PathSpec>,
    neq: Option<(usize, usize)>,
}

fn host() -> impl Strategy<Value = Host> {
    (1usize..6).prop_flat_map(|n| {
        (
            proptest::collection::vec(0usize..3, n),
            proptest::collection::vec((0..n, 0usize..2, 0..n), 0..10),
        )
            .prop_map(|(types, edges)| Host { types, edges })
    })
}

fn atoms() -> impl Strategy<Value = Vec<(usize, bool)>> {
    proptest::collection::vec((0usize..2, any::<bool>()), 1..3)
}

fn pattern() -> impl Strategy<Value = Pattern> {
    (1usize..4).prop_flat_map(|k| {
        (
            proptest::collection::vec(0usize..3, k),
            proptest::collection::vec((0..k, 0usize..2, 0..k), 0..3),
            proptest::option::of((0..k, atoms(), 0..k)),
            proptest::option::of((0..k, 0usize..2, 0..k)),
            proptest::option::of((0usize..2, 0..k)),
            proptest::option::of((0..k, atoms(), 0..k)),
            proptest::option::of((0..k, 0..k)),
        )
            .prop_map(|(types, edges, path, nac_edge, nac_incoming, nac_path, neq)| Pattern {
                types,
                edges,
                path,
                nac_edge,
                nac_incoming,
                nac_path,
                neq,
            })
    })
}

fn build_host(h: &Host) -> (HostGraph, Vec<NodeId>) {
    let mut g = HostGraph::new("h");
    let ids: Vec<NodeId> = h
        .types
        .iter()
        .map(|&t| {
            let labels: Vec<Label> = TYPES[t].map(|t| Label::node_type(t).unwrap()).into_iter().collect();
            g.add_node(&labels, &[]).unwrap()
        })
        .collect();
    for &(s, l, t) in &h.edges {
        g.add_edge(ids[s], &Label::edge(LABELS[l]).unwrap(), ids[t]).unwrap();
    }
    (g, ids)
}

fn regex(atoms: &[(usize, bool)]) -> RegexPath {
    RegexPath::new(
        atoms
            .iter()
            .map(|&(l, inv)| PathAtom {
                label: LABELS[l].into(),
                direction: if inv { Direction::Inverse } else { Direction::Forward },
            })
            .collect(),
    )
    .unwrap()
}

/// Adds the pattern at `level`; returns its node ids.
fn add_pattern(b: &mut RuleBuilder, p: &Pattern, level: QuantId) -> Vec<RuleNodeId> {
    let ids: Vec<RuleNodeId> = p
        .types
        .iter()
        .enumerate()
        .map(|(i, &t)| b.node(format!("x{i}"), Role::Reader, TYPES[t], level))
        .collect();
    for &(s, l, t) in &p.edges {
        b.edge(ids[s], LABELS[l], ids[t], Role::Reader, level);
    }
    if let Some((s, atoms, t)) = &p.path {
        b.path(ids[*s], regex(atoms), ids[*t], Role::Reader, level);
    }
    if let Some((s, l, t)) = p.nac_edge {
        b.edge(ids[s], LABELS[l], ids[t], Role::Embargo, level);
    }
    if let Some((l, t)) = p.nac_incoming {
        let y = b.node("y", Role::Embargo, None, level);
        b.edge(y, LABELS[l], ids[t], Role::Embargo, level);
    }
    if let Some((s, atoms, t)) = &p.nac_path {
        b.path(ids[*s], regex(atoms), ids[*t], Role::Embargo, level);
    }
    if let Some((a, c)) = p.neq {
        b.neq(&[ids[a], ids[c]]);
    }
    ids
}

/// Pairs related by the path, by composing one relation per atom.
fn path_relation(h: &Host, atoms: &[(usize, bool)]) -> BTreeSet<(usize, usize)> {
    let n = h.types.len();
    let mut rel: BTreeSet<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    for &(l, inv) in atoms {
        let step: BTreeSet<(usize, usize)> = h
            .edges
            .iter()
            .filter(|e| e.1 == l)
            .map(|&(s, _, t)| if inv { (t, s) } else { (s, t) })
            .collect();
        rel = rel
            .iter()
            .flat_map(|&(a, b)| step.iter().filter(move |s| s.0 == b).map(move |s| (a, s.1)))
            .collect();
    }
    rel
}

fn oracle(h: &Host, p: &Pattern) -> BTreeSet<Vec<usize>> {
    let n = h.types.len();
    let k = p.types.len();
    let has = |s: usize, l: usize, t: usize| h.edges.contains(&(s, l, t));
    let path = p.path.as_ref().map(|(_, a, _)| path_relation(h, a));
    let nac_path = p.nac_path.as_ref().map(|(_, a, _)| path_relation(h, a));
    let mut out = BTreeSet::new();
    let mut m = vec![0usize; k];
    'outer: loop {
        let ok = (0..k).all(|i| p.types[i] == 0 || h.types[m[i]] == p.types[i])
            && p.edges.iter().all(|&(s, l, t)| has(m[s], l, m[t]))
            && p.path
                .as_ref()
                .is_none_or(|(s, _, t)| path.as_ref().unwrap().contains(&(m[*s], m[*t])))
            && p.nac_edge.is_none_or(|(s, l, t)| !has(m[s], l, m[t]))
            && p.nac_incoming.is_none_or(|(l, t)| !(0..n).any(|y| has(y, l, m[t])))
            && p.nac_path
                .as_ref()
                .is_none_or(|(s, _, t)| !nac_path.as_ref().unwrap().contains(&(m[*s], m[*t])))
            && p.neq.is_none_or(|(a, c)| a == c || m[a] != m[c]); // the builder drops `neq x x`
        if ok {
            out.insert(m.clone());
        }
        for x in m.iter_mut() {
            *x += 1;
            if *x < n {
                continue 'outer;
            }
            *x = 0;
        }
        break;
    }
    out
}

fn as_indices(m: &Match, pattern: &[RuleNodeId], ids: &[NodeId]) -> Vec<usize> {
    pattern
        .iter()
        .map(|&r| ids.iter().position(|&h| Some(h) == m.get(r)).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn root_matches_equal_enumeration(h in host(), p in pattern()) {
        let (g, ids) = build_host(&h);
        let mut b = RuleBuilder::new("r");
        let pat = add_pattern(&mut b, &p, QuantId::ROOT);
        let r = b.build().unwrap();
        let got: BTreeSet<Vec<usize>> = find_root_matches(&r, &g, TypeEnv::untyped())
            .iter()
            .map(|m| as_indices(m, &pat, &ids))
            .collect();
        prop_assert_eq!(got, oracle(&h, &p));
    }

    #[test]
    fn forall_count_equals_enumeration(h in host(), p in pattern()) {
        let (g, _) = build_host(&h);
        let mut b = RuleBuilder::new("r");
        let q = b.quant("q", QuantKind::Forall, QuantId::ROOT);
        b.count(q, 0);
        add_pattern(&mut b, &p, q);
        let r = b.build().unwrap();
        let roots = find_root_matches(&r, &g, TypeEnv::untyped());
        prop_assert_eq!(roots.len(), 1);
        let set = collect_level_matches(&r, &g, TypeEnv::untyped(), &roots[0]);
        prop_assert_eq!(set.count(q), oracle(&h, &p).len());
    }

    #[test]
    fn path_evaluation_equals_composition(h in host(), a in atoms()) {
        let (g, ids) = build_host(&h);
        let rel = path_relation(&h, &a);
        for (i, &start) in ids.iter().enumerate() {
            let got: BTreeSet<usize> = evaluate_regex_path(&g, start, &regex(&a))
                .into_iter()
                .map(|n| ids.iter().position(|&x| x == n).unwrap())
                .collect();
            let want: BTreeSet<usize> = rel.iter().filter(|(s, _)| *s == i).map(|(_, t)| *t).collect();
            prop_assert_eq!(got, want);
        }
    }
}
