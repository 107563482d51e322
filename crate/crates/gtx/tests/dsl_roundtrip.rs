//! Round trips through the graph text format.

use gtx::dsl::{parse_graph, serialize_graph};
use gtx::suite::{random_nodified, FIXTURE_FILES};
use gtx_core::explore::isomorphic;
use gtx_core::graph::{HostGraph, NodeId};
use gtx_core::label::{Label, Value};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        "[a-z\"\\\\\n é]{0,6}".prop_map(Value::Str),
        any::<i64>().prop_map(Value::Int),
        any::<bool>().prop_map(Value::Bool),
        prop_oneof![
            any::<f64>().prop_filter("finite", |r| r.is_finite()),
            Just(f64::INFINITY),
            Just(f64::NEG_INFINITY),
            Just(-0.0),
        ]
        .prop_map(Value::Real),
    ]
}

#[derive(Debug, Clone)]
struct NodeSpec {
    name: Option<String>,
    types: Vec<usize>,
    flags: Vec<usize>,
    attrs: Vec<(usize, Value)>,
}

fn node() -> impl Strategy<Value = NodeSpec> {
    (
        proptest::option::of("[a-z][a-z0-9_]{0,3}"),
        proptest::collection::vec(0usize..3, 0..3),
        proptest::collection::vec(0usize..2, 0..2),
        proptest::collection::vec((0usize..3, value()), 0..3),
    )
        .prop_map(|(name, types, flags, attrs)| NodeSpec {
            name,
            types,
            flags,
            attrs,
        })
}

fn graph() -> impl Strategy<Value = HostGraph> {
    (1usize..7)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(node(), n),
                proptest::collection::vec((0..n, 0usize..3, 0..n), 0..12),
            )
        })
        .prop_map(|(nodes, edges)| {
            let mut g = HostGraph::new("random");
            let ids: Vec<NodeId> = nodes
                .iter()
                .map(|spec| {
                    let types: Vec<Label> = spec
                        .types
                        .iter()
                        .map(|t| Label::node_type(["A", "B", "C"][*t]).unwrap())
                        .collect();
                    let flags: Vec<Label> = spec
                        .flags
                        .iter()
                        .map(|f| Label::flag(["on", "seen"][*f]).unwrap())
                        .collect();
                    let id = g.add_node(&types, &flags).unwrap();
                    for (k, v) in &spec.attrs {
                        g.set_attr(id, ["x", "y", "z"][*k], v.clone()).unwrap();
                    }
                    if let Some(name) = &spec.name {
                        g.set_node_name(id, name).unwrap();
                    }
                    id
                })
                .collect();
            for (s, l, t) in edges {
                g.add_edge(ids[s], &Label::edge(["p", "q", "r"][l]).unwrap(), ids[t])
                    .unwrap();
            }
            g
        })
}

proptest! {
    #[test]
    fn serialize_parse_is_stable(g in graph()) {
        let text = serialize_graph(&g);
        let parsed = parse_graph(&text).unwrap();
        prop_assert!(isomorphic(&parsed, &g), "{}", text);
        prop_assert_eq!(serialize_graph(&parsed), text);
    }
}

#[test]
fn fixture_graph_round_trips() {
    let start = FIXTURE_FILES.iter().find(|(n, _)| *n == "start.gst").unwrap().1;
    let first = parse_graph(start).unwrap();
    let text = serialize_graph(&first);
    let second = parse_graph(&text).unwrap();
    assert!(isomorphic(&first, &second));
    assert_eq!(serialize_graph(&second), text);
    assert_eq!(second.node_name(second.node_ids().next().unwrap()), Some("e1"));
}

#[test]
fn random_nodified_graphs_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let g = random_nodified(&mut rng, 8, 12);
        let text = serialize_graph(&g);
        let back = parse_graph(&text).unwrap();
        assert!(isomorphic(&g, &back), "{text}");
        assert_eq!(serialize_graph(&back), text);
    }
}
