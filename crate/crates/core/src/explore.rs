//! State-space exploration up to graph isomorphism.
//!
//! States are identified by a [`certificate`]: a colour-refinement hash that
//! is equal for isomorphic graphs. Equal certificates are confirmed with an
//! exact backtracking isomorphism check, so hash collisions never merge
//! distinct states.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use crate::graph::{HostGraph, NodeId};
use crate::hash::Fnv;
use crate::matcher::Matcher;
use crate::rewrite::{apply_effect, plan_application};
use crate::rule::Rule;
use crate::types::TypeEnv;

/// Per-node colours after `node_count` rounds of refinement.
fn colours(g: &HostGraph) -> BTreeMap<NodeId, u64> {
    let mut col: BTreeMap<NodeId, u64> = g
        .nodes()
        .map(|(id, n)| {
            let mut h = Fnv::new();
            for t in n.types() {
                h.bytes(b"t").str(t);
            }
            for f in n.flags() {
                h.bytes(b"f").str(f);
            }
            for (k, v) in n.attrs() {
                h.bytes(b"a").str(k).value(v);
            }
            (id, h.finish())
        })
        .collect();
    let mut classes = distinct(&col);
    for _ in 0..g.node_count() {
        let next: BTreeMap<NodeId, u64> = col
            .iter()
            .map(|(&id, &c)| {
                let mut out: Vec<(&str, u64)> = g.out_edges(id).map(|(l, t)| (l, col[&t])).collect();
                let mut inc: Vec<(&str, u64)> = g.in_edges(id).map(|(l, s)| (l, col[&s])).collect();
                out.sort_unstable();
                inc.sort_unstable();
                let mut h = Fnv::new();
                h.u64(c).bytes(b"o");
                for (l, n) in out {
                    h.str(l).u64(n);
                }
                h.bytes(b"i");
                for (l, n) in inc {
                    h.str(l).u64(n);
                }
                (id, h.finish())
            })
            .collect();
        col = next;
        let refined = distinct(&col);
        if refined == classes {
            break;
        }
        classes = refined;
    }
    col
}

fn distinct(col: &BTreeMap<NodeId, u64>) -> usize {
    col.values().collect::<BTreeSet<_>>().len()
}

/// Isomorphism-invariant 64-bit hash of `g`.
pub fn certificate(g: &HostGraph) -> u64 {
    let mut hs: Vec<u64> = colours(g).into_values().collect();
    hs.sort_unstable();
    let mut h = Fnv::new();
    h.u64(g.node_count() as u64).u64(g.edge_count() as u64);
    for c in hs {
        h.u64(c);
    }
    h.finish()
}

/// Exact isomorphism test, respecting node content and labelled edges.
pub fn isomorphic(a: &HostGraph, b: &HostGraph) -> bool {
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return false;
    }
    let ca = colours(a);
    let cb = colours(b);
    let mut by_colour: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
    for (&n, &c) in &cb {
        by_colour.entry(c).or_default().push(n);
    }
    let mut sig_a: Vec<u64> = ca.values().copied().collect();
    let mut sig_b: Vec<u64> = cb.values().copied().collect();
    sig_a.sort_unstable();
    sig_b.sort_unstable();
    if sig_a != sig_b {
        return false;
    }
    // smallest colour classes first
    let mut order: Vec<NodeId> = ca.keys().copied().collect();
    order.sort_by_key(|n| (by_colour[&ca[n]].len(), *n));
    let mut map = BTreeMap::new();
    let mut used = BTreeSet::new();
    extend(a, b, &ca, &by_colour, &order, &mut map, &mut used)
}

fn extend(
    a: &HostGraph,
    b: &HostGraph,
    ca: &BTreeMap<NodeId, u64>,
    by_colour: &BTreeMap<u64, Vec<NodeId>>,
    order: &[NodeId],
    map: &mut BTreeMap<NodeId, NodeId>,
    used: &mut BTreeSet<NodeId>,
) -> bool {
    let Some((&u, rest)) = order.split_first() else {
        return true;
    };
    for &x in &by_colour[&ca[&u]] {
        if used.contains(&x) || a.node(u) != b.node(x) {
            continue;
        }
        let fits = a.out_edges(u).all(|(l, t)| {
            if t == u {
                b.has_edge(x, l, x)
            } else {
                map.get(&t).is_none_or(|&y| b.has_edge(x, l, y))
            }
        }) && a
            .in_edges(u)
            .all(|(l, s)| s == u || map.get(&s).is_none_or(|&y| b.has_edge(y, l, x)));
        if !fits {
            continue;
        }
        map.insert(u, x);
        used.insert(x);
        if extend(a, b, ca, by_colour, rest, map, used) {
            return true;
        }
        map.remove(&u);
        used.remove(&x);
    }
    false
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub graph: HostGraph,
    pub certificate: u64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Transition {
    pub from: usize,
    pub rule: String,
    pub to: usize,
}

/// A labelled transition system over states `0..states.len()`; state 0 is
/// the start graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    pub states: Vec<State>,
    pub transitions: Vec<Transition>,
    /// Set when a new state was dropped by the state limit, or a state at the
    /// depth limit still had an applicable rule.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_depth: usize,
}

/// Breadth-first exploration of all applications of all `rules`.
pub fn explore(rules: &[Rule], start: &HostGraph, env: TypeEnv<'_>, limits: Limits) -> Lts {
    let mut lts = Lts {
        states: Vec::new(),
        transitions: Vec::new(),
        truncated: false,
    };
    if limits.max_states == 0 {
        lts.truncated = true;
        return lts;
    }
    let mut buckets: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    let cert = certificate(start);
    buckets.entry(cert).or_default().push(0);
    lts.states.push(State {
        graph: start.clone(),
        certificate: cert,
        depth: 0,
    });
    let mut queue = VecDeque::from([0usize]);

    while let Some(s) = queue.pop_front() {
        let graph = lts.states[s].graph.clone();
        let depth = lts.states[s].depth;
        for rule in rules {
            let roots = Matcher::new(rule, &graph, env).root_matches();
            if roots.is_empty() {
                continue;
            }
            if depth >= limits.max_depth {
                lts.truncated = true;
                break;
            }
            for root in roots {
                let next = apply_effect(&graph, &plan_application(rule, &graph, env, &root));
                let cert = certificate(&next);
                let found = buckets
                    .get(&cert)
                    .and_then(|ids| ids.iter().copied().find(|&i| isomorphic(&lts.states[i].graph, &next)));
                let to = match found {
                    Some(i) => i,
                    None if lts.states.len() < limits.max_states => {
                        let id = lts.states.len();
                        buckets.entry(cert).or_default().push(id);
                        lts.states.push(State {
                            graph: next,
                            certificate: cert,
                            depth: depth + 1,
                        });
                        queue.push_back(id);
                        id
                    }
                    None => {
                        lts.truncated = true;
                        continue;
                    }
                };
                let t = Transition {
                    from: s,
                    rule: rule.name().into(),
                    to,
                };
                if seen.insert(t.clone()) {
                    lts.transitions.push(t);
                }
            }
        }
    }
    lts
}
