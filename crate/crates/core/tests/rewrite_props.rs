//! Properties of rule application on random graphs.

use gtx_core::explore::isomorphic;
use gtx_core::graph::{HostGraph, NodeId};
use gtx_core::label::Label;
use gtx_core::rewrite::apply_rule;
use gtx_core::rule::{QuantId, QuantKind, Role, RuleBuilder};
use gtx_core::types::TypeEnv;
use proptest::prelude::*;

fn graph() -> impl Strategy<Value = (Vec<bool>, Vec<(usize, u8, usize)>)> {
    (1usize..8).prop_flat_map(|n| {
        (
            proptest::collection::vec(any::<bool>(), n),
            proptest::collection::vec((0..n, 0u8..2, 0..n), 0..16),
        )
    })
}

fn build(marks: &[bool], edges: &[(usize, u8, usize)]) -> (HostGraph, Vec<NodeId>) {
    let mut g = HostGraph::new("g");
    let ids: Vec<NodeId> = marks
        .iter()
        .map(|&m| {
            let ty = Label::node_type(if m { "Doomed" } else { "Kept" }).unwrap();
            g.add_node(&[ty], &[]).unwrap()
        })
        .collect();
    for &(s, l, t) in edges {
        let l = Label::edge(if l == 0 { "a" } else { "b" }).unwrap();
        g.add_edge(ids[s], &l, ids[t]).unwrap();
    }
    (g, ids)
}

proptest! {
    #[test]
    fn universal_deletion_leaves_no_dangling_edges((marks, edges) in graph()) {
        let (g, ids) = build(&marks, &edges);
        let mut b = RuleBuilder::new("purge");
        let q = b.quant("q", QuantKind::Forall, QuantId::ROOT);
        b.node("d", Role::Eraser, Some("Doomed"), q);
        let r = b.build().unwrap();
        let out = apply_rule(&r, &g, TypeEnv::untyped()).unwrap().unwrap().graph;
        prop_assert!(out.dangling_edges().is_empty());
        for (i, id) in ids.iter().enumerate() {
            prop_assert_eq!(out.contains_node(*id), !marks[i]);
        }
        let kept = g
            .edges()
            .filter(|(s, _, t)| out.contains_node(*s) && out.contains_node(*t))
            .count();
        prop_assert_eq!(out.edge_count(), kept);
    }

    #[test]
    fn label_swap_is_an_involution((marks, edges) in graph()) {
        let (g, _) = build(&marks, &edges);
        let mut b = RuleBuilder::new("swap");
        for (from, to) in [("a", "b"), ("b", "a")] {
            let q = b.quant(from, QuantKind::Forall, QuantId::ROOT);
            let x = b.node("x", Role::Reader, None, q);
            let y = b.node("y", Role::Reader, None, q);
            b.edge(x, from, y, Role::Eraser, q);
            b.edge(x, to, y, Role::Creator, q);
        }
        let r = b.build().unwrap();
        let once = apply_rule(&r, &g, TypeEnv::untyped()).unwrap().unwrap().graph;
        for (s, l, t) in g.edges() {
            let other = if l == "a" { "b" } else { "a" };
            prop_assert!(once.has_edge(s, other, t));
        }
        prop_assert_eq!(once.edge_count(), g.edge_count());
        let twice = apply_rule(&r, &once, TypeEnv::untyped()).unwrap().unwrap().graph;
        prop_assert_eq!(&twice, &g);
        prop_assert!(isomorphic(&twice, &g));
    }
}
