use alloc::string::String;
use core::fmt;

use crate::graph::NodeId;
use crate::rule::{QuantId, RuleNodeId};

/// Where a violation was found. Front-ends map these back to source spans.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    TypeGraph,
    Type(String),
    TypeAttr(String, String),
    TypeEdge(usize),
    Node(NodeId),
    NodeAttr(NodeId, String),
    Edge(NodeId, String, NodeId),
    Rule,
    RuleNode(RuleNodeId),
    RuleEdge(usize),
    Quantifier(QuantId),
    Param(u32),
    Group(usize),
    Disjunction(usize),
    Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    InheritanceCycle,
    UnresolvedReference,
    AttrRedeclared,
    UnknownType,
    AbstractInstance,
    UndeclaredAttr,
    AttrTypeMismatch,
    UnlicensedEdge,
    QuantifierTree,
    UnknownLevel,
    LevelScope,
    RoleRestriction,
    PathRole,
    CountParam,
    ParamIndex,
    NacGroup,
    Disjunction,
    Format,
    Unlicensed,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub location: Location,
    pub kind: ViolationKind,
    pub message: String,
}

impl Violation {
    pub fn new(location: Location, kind: ViolationKind, message: impl Into<String>) -> Self {
        Violation {
            location,
            kind,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}
