//! Type graphs: node types with inheritance and abstract markers, attribute
//! declarations and edge declarations, plus conformance of host graphs.
//!
//! Several type graphs may be enabled at once. They combine per element: a
//! host node, attribute or edge is accepted if any enabled type graph accepts
//! it. Flags are never declared and never checked.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::HostGraph;
use crate::label::ValueType;
use crate::violation::{Location, Violation, ViolationKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type `{0}` is not declared")]
    UnknownType(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub is_abstract: bool,
    pub supertypes: BTreeSet<String>,
    pub attrs: BTreeMap<String, ValueType>,
}

impl TypeDecl {
    pub fn new(name: impl Into<String>) -> Self {
        TypeDecl {
            name: name.into(),
            is_abstract: false,
            supertypes: BTreeSet::new(),
            attrs: BTreeMap::new(),
        }
    }

    pub fn abstract_type(mut self) -> Self {
        self.is_abstract = true;
        self
    }

    pub fn extends(mut self, ty: impl Into<String>) -> Self {
        self.supertypes.insert(ty.into());
        self
    }

    pub fn attr(mut self, name: impl Into<String>, ty: ValueType) -> Self {
        self.attrs.insert(name.into(), ty);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct EdgeDecl {
    pub src: String,
    pub label: String,
    pub tgt: String,
}

impl EdgeDecl {
    pub fn new(src: impl Into<String>, label: impl Into<String>, tgt: impl Into<String>) -> Self {
        EdgeDecl {
            src: src.into(),
            label: label.into(),
            tgt: tgt.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypeGraph {
    name: String,
    types: BTreeMap<String, TypeDecl>,
    edges: Vec<EdgeDecl>,
}

impl TypeGraph {
    pub fn new(name: impl Into<String>) -> Self {
        TypeGraph {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Adds a type declaration, replacing any earlier one with the same name.
    pub fn declare(&mut self, decl: TypeDecl) -> &mut Self {
        self.types.insert(decl.name.clone(), decl);
        self
    }

    pub fn declare_edge(&mut self, decl: EdgeDecl) -> &mut Self {
        self.edges.push(decl);
        self
    }

    pub fn get(&self, ty: &str) -> Option<&TypeDecl> {
        self.types.get(ty)
    }

    pub fn types(&self) -> impl Iterator<Item = &TypeDecl> + '_ {
        self.types.values()
    }

    pub fn edge_decls(&self) -> &[EdgeDecl] {
        &self.edges
    }

    pub fn declares(&self, ty: &str) -> bool {
        self.types.contains_key(ty)
    }

    /// `ty` and all of its declared transitive supertypes. Terminates on
    /// cyclic hierarchies; undeclared supertypes are skipped.
    pub fn ancestors<'a>(&'a self, ty: &'a str) -> BTreeSet<&'a str> {
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![ty];
        while let Some(t) = stack.pop() {
            if !seen.insert(t) {
                continue;
            }
            if let Some(decl) = self.types.get(t) {
                stack.extend(decl.supertypes.iter().map(String::as_str));
            }
        }
        seen
    }

    /// True iff `a == b` or `a` transitively extends `b`.
    pub fn is_subtype(&self, a: &str, b: &str) -> Result<bool, TypeError> {
        for t in [a, b] {
            if !self.declares(t) {
                return Err(TypeError::UnknownType(t.into()));
            }
        }
        Ok(self.ancestors(a).contains(b))
    }

    fn subtype_or_false(&self, a: &str, b: &str) -> bool {
        self.declares(a) && self.declares(b) && self.ancestors(a).contains(b)
    }

    /// Declared value type of attribute `attr` on `ty`, own or inherited.
    pub fn attr_type(&self, ty: &str, attr: &str) -> Option<ValueType> {
        self.ancestors(ty)
            .into_iter()
            .filter_map(|t| self.types.get(t))
            .find_map(|d| d.attrs.get(attr).copied())
    }
}

/// Structural problems of a type graph: unresolved references, inheritance
/// cycles and attribute redeclarations with a different value type.
pub fn validate_type_graph(tg: &TypeGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    for decl in tg.types.values() {
        for sup in &decl.supertypes {
            if !tg.declares(sup) {
                out.push(Violation::new(
                    Location::Type(decl.name.clone()),
                    ViolationKind::UnresolvedReference,
                    format!("type `{}` extends undeclared type `{sup}`", decl.name),
                ));
            }
        }
    }

    // A type is on a cycle iff it is reachable from one of its direct
    // supertypes. Each strongly connected component is reported once.
    let mut reported: BTreeSet<&str> = BTreeSet::new();
    for decl in tg.types.values() {
        let name = decl.name.as_str();
        if reported.contains(name) {
            continue;
        }
        let on_cycle = decl.supertypes.iter().any(|s| tg.ancestors(s).contains(name));
        if !on_cycle {
            continue;
        }
        let component: BTreeSet<&str> = tg
            .ancestors(name)
            .into_iter()
            .filter(|t| tg.ancestors(t).contains(name))
            .collect();
        let members: Vec<&str> = component.iter().copied().collect();
        out.push(Violation::new(
            Location::Type(name.into()),
            ViolationKind::InheritanceCycle,
            format!("inheritance cycle through {}", members.join(", ")),
        ));
        reported.extend(component);
    }

    for (i, e) in tg.edges.iter().enumerate() {
        let missing: Vec<&str> = [e.src.as_str(), e.tgt.as_str()]
            .into_iter()
            .filter(|t| !tg.declares(t))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if !missing.is_empty() {
            out.push(Violation::new(
                Location::TypeEdge(i),
                ViolationKind::UnresolvedReference,
                format!(
                    "edge declaration `{} -{}-> {}` references undeclared type {}",
                    e.src,
                    e.label,
                    e.tgt,
                    missing.join(", ")
                ),
            ));
        }
    }

    for decl in tg.types.values() {
        for (attr, ty) in &decl.attrs {
            for sup in tg.ancestors(&decl.name) {
                if sup == decl.name {
                    continue;
                }
                if let Some(other) = tg.types.get(sup).and_then(|d| d.attrs.get(attr)) {
                    if other != ty {
                        out.push(Violation::new(
                            Location::TypeAttr(decl.name.clone(), attr.clone()),
                            ViolationKind::AttrRedeclared,
                            format!(
                                "attribute `{}.{attr}` redeclared as {ty}, inherited from `{sup}` as {other}",
                                decl.name
                            ),
                        ));
                        break;
                    }
                }
            }
        }
    }
    out
}

/// Checks `g` against the enabled type graphs. With no type graph enabled
/// nothing is checked.
pub fn conforms(tgs: &[TypeGraph], g: &HostGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    if tgs.is_empty() {
        return out;
    }
    for (id, node) in g.nodes() {
        for ty in node.types() {
            let declaring: Vec<&TypeGraph> = tgs.iter().filter(|tg| tg.declares(ty)).collect();
            if declaring.is_empty() {
                out.push(Violation::new(
                    Location::Node(id),
                    ViolationKind::UnknownType,
                    format!("node {id} has undeclared type `{ty}`"),
                ));
            } else if declaring.iter().all(|tg| tg.get(ty).is_some_and(|d| d.is_abstract)) {
                out.push(Violation::new(
                    Location::Node(id),
                    ViolationKind::AbstractInstance,
                    format!("node {id} instantiates abstract type `{ty}`"),
                ));
            }
        }
        for (attr, value) in node.attrs() {
            let declared: Vec<ValueType> = tgs
                .iter()
                .flat_map(|tg| node.types().filter_map(move |t| tg.attr_type(t, attr)))
                .collect();
            if declared.contains(&value.value_type()) {
                continue;
            }
            let (kind, message) = if declared.is_empty() {
                (
                    ViolationKind::UndeclaredAttr,
                    format!("node {id} has undeclared attribute `{attr}`"),
                )
            } else {
                (
                    ViolationKind::AttrTypeMismatch,
                    format!(
                        "attribute `{attr}` of node {id} is {}, declared as {}",
                        value.value_type(),
                        declared[0]
                    ),
                )
            };
            out.push(Violation::new(Location::NodeAttr(id, attr.clone()), kind, message));
        }
    }
    for (s, label, t) in g.edges() {
        let (Some(sn), Some(tn)) = (g.node(s), g.node(t)) else {
            continue;
        };
        let licensed = tgs.iter().any(|tg| {
            tg.edges.iter().any(|d| {
                d.label == label
                    && sn.types().any(|ty| tg.subtype_or_false(ty, &d.src))
                    && tn.types().any(|ty| tg.subtype_or_false(ty, &d.tgt))
            })
        });
        if !licensed {
            out.push(Violation::new(
                Location::Edge(s, label.into(), t),
                ViolationKind::UnlicensedEdge,
                format!("edge {s} -{label}-> {t} is not licensed by any type graph"),
            ));
        }
    }
    out
}

/// Subtyping view over the enabled type graphs, used by the matcher.
///
/// Without type graphs a type constraint matches only the identical type.
#[derive(Debug, Clone, Copy, Default)]
pub struct TypeEnv<'a> {
    graphs: &'a [TypeGraph],
}

impl<'a> TypeEnv<'a> {
    pub fn new(graphs: &'a [TypeGraph]) -> Self {
        TypeEnv { graphs }
    }

    pub fn untyped() -> Self {
        TypeEnv { graphs: &[] }
    }

    pub fn graphs(&self) -> &'a [TypeGraph] {
        self.graphs
    }

    pub fn is_subtype(&self, a: &str, b: &str) -> bool {
        a == b || self.graphs.iter().any(|tg| tg.subtype_or_false(a, b))
    }

    /// Whether `a` and `b` are related in either direction.
    pub fn comparable(&self, a: &str, b: &str) -> bool {
        self.is_subtype(a, b) || self.is_subtype(b, a)
    }
}
