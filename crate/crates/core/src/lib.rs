//! Core of a graph transformation engine over simple labelled graphs.
//!
//! Host graphs ([`graph::HostGraph`]) are directed graphs without parallel
//! edges whose nodes carry node types, flags and attributes. Rules
//! ([`rule::Rule`]) are single graphs whose elements are readers, erasers,
//! creators or embargoes, organised in a tree of quantifier levels. The
//! [`matcher`] finds matches, the [`rewrite`] module applies them with
//! single-pushout semantics, and [`explore`] builds the state space reachable
//! from a start graph.
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]

extern crate alloc;

pub mod explore;
pub mod format;
pub mod graph;
mod hash;
pub mod label;
pub mod matcher;
pub mod rewrite;
pub mod rule;
pub mod types;
pub mod violation;

pub use graph::{Edge, GraphError, HostGraph, HostNode, NodeId};
pub use label::{Label, LabelKind, Value, ValueType};
pub use matcher::{LevelMatchSet, Match};
pub use rewrite::{ApplicationResult, Effect};
pub use rule::{Role, Rule, RuleBuilder};
pub use types::{TypeEnv, TypeGraph};
pub use violation::{Location, Violation, ViolationKind};
