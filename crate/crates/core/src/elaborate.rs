//! Elaboration of a function net definition into its instance tree.
//!
//! Every `inst` is replaced by a copy of the template structure under the
//! instance name, names become absolute, and connectors are resolved to
//! absolute endpoints. Signals of connectors declared inside a template are
//! qualified with the instance path, so `ContactState` inside `CLS.door_fl`
//! becomes `CLS.door_fl.ContactState`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::model::{
    BlockTemplate, Child, ConnectorDecl, FunctionNetDef, Ident, Loc, QualifiedName, SourceLocation,
    Stereotype,
};

/// Where a connector starts or ends: a block instance or the net boundary.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Boundary,
    Block(QualifiedName),
}

impl Endpoint {
    pub fn block(&self) -> Option<&QualifiedName> {
        match self {
            Endpoint::Block(q) => Some(q),
            Endpoint::Boundary => None,
        }
    }

    /// `self` lies in the subtree rooted at `root` (inclusive). The boundary
    /// is its own subtree.
    pub fn is_within(&self, root: &Endpoint) -> bool {
        match (root, self) {
            (Endpoint::Boundary, Endpoint::Boundary) => true,
            (Endpoint::Block(r), Endpoint::Block(e)) => r == e || r.is_strict_prefix_of(e),
            _ => false,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Boundary => f.write_str("<boundary>"),
            Endpoint::Block(q) => q.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceNode {
    pub qname: QualifiedName,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Template this node was instantiated from, if it is an instance root.
    pub template: Option<Ident>,
    pub in_ports: BTreeSet<Ident>,
    pub out_ports: BTreeSet<Ident>,
}

impl InstanceNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A connector with absolute endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElabConnector {
    pub source: Endpoint,
    pub targets: Vec<Endpoint>,
    /// Instance-qualified signal name.
    pub signal: Option<QualifiedName>,
    /// Signal name as written in the declaring scope.
    pub local_signal: Option<QualifiedName>,
    pub stereotype: Option<Stereotype>,
    pub loc: Loc,
}

impl ElabConnector {
    /// True if `name` is this connector's qualified or as-written signal.
    pub fn carries(&self, name: &QualifiedName) -> bool {
        self.signal.as_ref() == Some(name) || self.local_signal.as_ref() == Some(name)
    }
}

/// The fully instantiated ("150 percent") net.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceTree {
    pub net_name: Ident,
    nodes: Vec<InstanceNode>,
    roots: Vec<usize>,
    index: BTreeMap<QualifiedName, usize>,
    pub connectors: Vec<ElabConnector>,
    pub in_ports: BTreeSet<Ident>,
    pub out_ports: BTreeSet<Ident>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` does not name a block of the net")]
pub struct UnresolvedName(pub String);

impl InstanceTree {
    /// Nodes in depth-first declaration order.
    pub fn nodes(&self) -> &[InstanceNode] {
        &self.nodes
    }

    pub fn roots(&self) -> impl Iterator<Item = &InstanceNode> {
        self.roots.iter().map(|&i| &self.nodes[i])
    }

    pub fn node(&self, qname: &QualifiedName) -> Option<&InstanceNode> {
        self.index.get(qname).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, qname: &QualifiedName) -> bool {
        self.index.contains_key(qname)
    }

    pub fn children_of<'a>(
        &'a self,
        node: &'a InstanceNode,
    ) -> impl Iterator<Item = &'a InstanceNode> {
        node.children.iter().map(|&i| &self.nodes[i])
    }

    pub fn parent_of(&self, node: &InstanceNode) -> Option<&InstanceNode> {
        node.parent.map(|i| &self.nodes[i])
    }

    pub fn leaves(&self) -> impl Iterator<Item = &InstanceNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    /// Nodes at or below `qname`, in tree order.
    pub fn subtree(&self, qname: &QualifiedName) -> Vec<&InstanceNode> {
        let mut out = Vec::new();
        if let Some(&i) = self.index.get(qname) {
            let mut stack = vec![i];
            while let Some(i) = stack.pop() {
                out.push(&self.nodes[i]);
                stack.extend(self.nodes[i].children.iter().rev());
            }
        }
        out
    }

    fn require(&self, qname: &QualifiedName) -> Result<(), UnresolvedName> {
        if self.contains(qname) {
            Ok(())
        } else {
            Err(UnresolvedName(qname.to_string()))
        }
    }

    fn require_endpoint(&self, e: &Endpoint) -> Result<(), UnresolvedName> {
        match e {
            Endpoint::Boundary => Ok(()),
            Endpoint::Block(q) => self.require(q),
        }
    }

    /// `a` is a transitive whole of part `b`.
    pub fn is_descendant(
        &self,
        a: &QualifiedName,
        b: &QualifiedName,
    ) -> Result<bool, UnresolvedName> {
        self.require(a)?;
        self.require(b)?;
        Ok(a.is_strict_prefix_of(b))
    }

    /// Signals sent from within subtree(`a`) and received by at least one
    /// endpoint within subtree(`b`).
    pub fn signals_between(
        &self,
        a: &Endpoint,
        b: &Endpoint,
    ) -> Result<BTreeSet<QualifiedName>, UnresolvedName> {
        self.require_endpoint(a)?;
        self.require_endpoint(b)?;
        Ok(self
            .connectors_between(a, b)
            .filter_map(|c| c.signal.clone())
            .collect())
    }

    /// Connectors whose source lies in subtree(`a`) and with a target in
    /// subtree(`b`).
    pub fn connectors_between<'a>(
        &'a self,
        a: &'a Endpoint,
        b: &'a Endpoint,
    ) -> impl Iterator<Item = &'a ElabConnector> + 'a {
        self.connectors
            .iter()
            .filter(move |c| c.source.is_within(a) && c.targets.iter().any(|t| t.is_within(b)))
    }

    /// Nodes that are strict descendants of `scope` (or anywhere, for `None`)
    /// whose names end with `tail`.
    pub fn find_by_suffix(
        &self,
        scope: Option<&QualifiedName>,
        tail: &[Ident],
    ) -> Vec<&QualifiedName> {
        self.index
            .keys()
            .filter(|q| q.ends_with(tail))
            .filter(|q| scope.is_none_or(|s| s.is_strict_prefix_of(q)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ElabError {
    #[error("instance `{instance}` refers to unknown template `{template}`")]
    UnknownTemplate {
        template: Ident,
        instance: String,
        location: Option<SourceLocation>,
    },
    #[error("recursive template instantiation: {}", cycle_text(.cycle))]
    RecursiveTemplate { cycle: Vec<Ident> },
    #[error("duplicate child `{name}` in `{parent}`")]
    DuplicateSibling {
        parent: String,
        name: Ident,
        location: Option<SourceLocation>,
    },
    #[error("connector endpoint `{path}` does not resolve in `{scope}`")]
    UnresolvedEndpoint {
        path: QualifiedName,
        scope: String,
        location: Option<SourceLocation>,
    },
}

fn cycle_text(cycle: &[Ident]) -> String {
    cycle
        .iter()
        .map(Ident::as_str)
        .collect::<Vec<_>>()
        .join(" -> ")
}

impl ElabError {
    pub fn location(&self) -> Option<SourceLocation> {
        match self {
            ElabError::UnknownTemplate { location, .. }
            | ElabError::DuplicateSibling { location, .. }
            | ElabError::UnresolvedEndpoint { location, .. } => *location,
            ElabError::RecursiveTemplate { .. } => None,
        }
    }

    /// The element the error is about, for diagnostic subjects.
    pub fn subject(&self) -> String {
        match self {
            ElabError::UnknownTemplate { instance, .. } => instance.clone(),
            ElabError::RecursiveTemplate { cycle } => cycle[0].to_string(),
            ElabError::DuplicateSibling { parent, name, .. } => format!("{parent}.{name}"),
            ElabError::UnresolvedEndpoint { path, .. } => path.to_string(),
        }
    }
}

/// Elaborates `net`, failing on the first class of errors found.
pub fn elaborate(net: &FunctionNetDef) -> Result<InstanceTree, Vec<ElabError>> {
    let (tree, errors) = elaborate_partial(net);
    match tree {
        Some(tree) if errors.is_empty() => Ok(tree),
        _ => Err(errors),
    }
}

/// Elaborates as far as possible.
///
/// Structural errors (unknown or recursive templates, duplicate siblings)
/// prevent building a tree. Unresolvable connector endpoints only drop the
/// affected connector, so the returned tree can still be checked.
pub fn elaborate_partial(net: &FunctionNetDef) -> (Option<InstanceTree>, Vec<ElabError>) {
    let mut errors = structural_errors(net);
    if !errors.is_empty() {
        return (None, errors);
    }

    let mut builder = Builder {
        net,
        nodes: Vec::new(),
        roots: Vec::new(),
        index: BTreeMap::new(),
        pending: Vec::new(),
    };
    builder.expand_body(&net.body, None, None, None);

    let Builder {
        nodes,
        roots,
        index,
        pending,
        ..
    } = builder;
    let mut tree = InstanceTree {
        net_name: net.name.clone(),
        nodes,
        roots,
        index,
        connectors: Vec::new(),
        in_ports: net.body.in_ports.clone(),
        out_ports: net.body.out_ports.clone(),
    };

    for p in pending {
        match resolve_connector(&tree, &p) {
            Ok(c) => tree.connectors.push(c),
            Err(mut e) => errors.append(&mut e),
        }
    }
    (Some(tree), errors)
}

fn structural_errors(net: &FunctionNetDef) -> Vec<ElabError> {
    let mut errors = Vec::new();

    duplicate_siblings(&net.body, &net.name.to_string(), &mut errors);
    for (name, t) in &net.templates {
        duplicate_siblings(t, name.as_str(), &mut errors);
    }

    unknown_templates(net, &net.body, &net.name.to_string(), &mut errors);
    for (name, t) in &net.templates {
        unknown_templates(net, t, name.as_str(), &mut errors);
    }

    errors.extend(template_cycles(net));
    errors
}

fn duplicate_siblings(block: &BlockTemplate, path: &str, errors: &mut Vec<ElabError>) {
    let mut seen = HashSet::new();
    for child in &block.children {
        if !seen.insert(child.name()) {
            errors.push(ElabError::DuplicateSibling {
                parent: path.to_string(),
                name: child.name().clone(),
                location: child.loc().get(),
            });
        }
        if let Child::Owned(b) = child {
            duplicate_siblings(b, &format!("{path}.{}", b.name), errors);
        }
    }
}

fn unknown_templates(
    net: &FunctionNetDef,
    block: &BlockTemplate,
    path: &str,
    errors: &mut Vec<ElabError>,
) {
    for child in &block.children {
        match child {
            Child::Owned(b) => unknown_templates(net, b, &format!("{path}.{}", b.name), errors),
            Child::Instance {
                template,
                name,
                loc,
            } => {
                if !net.templates.contains_key(template) {
                    errors.push(ElabError::UnknownTemplate {
                        template: template.clone(),
                        instance: format!("{path}.{name}"),
                        location: loc.get(),
                    });
                }
            }
        }
    }
}

/// One error per cycle in the template reference graph.
fn template_cycles(net: &FunctionNetDef) -> Vec<ElabError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }

    fn visit<'a>(
        net: &'a FunctionNetDef,
        name: &'a Ident,
        marks: &mut BTreeMap<&'a Ident, Mark>,
        stack: &mut Vec<&'a Ident>,
        out: &mut Vec<ElabError>,
    ) {
        marks.insert(name, Mark::Open);
        stack.push(name);
        let mut refs = net.templates[name].instantiated_templates();
        refs.dedup();
        for r in refs {
            if !net.templates.contains_key(r) {
                continue;
            }
            match marks.get(r) {
                Some(Mark::Open) => {
                    let start = stack.iter().position(|s| *s == r).expect("open on stack");
                    out.push(ElabError::RecursiveTemplate {
                        cycle: stack[start..].iter().map(|s| (*s).clone()).collect(),
                    });
                }
                Some(Mark::Done) => {}
                None => visit(net, r, marks, stack, out),
            }
        }
        stack.pop();
        marks.insert(name, Mark::Done);
    }

    let mut marks = BTreeMap::new();
    let mut out = Vec::new();
    for name in net.templates.keys() {
        if !marks.contains_key(name) {
            visit(net, name, &mut marks, &mut Vec::new(), &mut out);
        }
    }
    out
}

/// A connector awaiting resolution, with the scope it was declared in.
struct Pending<'a> {
    decl: &'a ConnectorDecl,
    /// Absolute name of the declaring block; `None` for the net body.
    scope: Option<QualifiedName>,
    /// Name the declaring scope can be referred to by from inside.
    scope_name: Ident,
    /// Innermost enclosing template instance.
    instance: Option<QualifiedName>,
}

struct Builder<'a> {
    net: &'a FunctionNetDef,
    nodes: Vec<InstanceNode>,
    roots: Vec<usize>,
    index: BTreeMap<QualifiedName, usize>,
    pending: Vec<Pending<'a>>,
}

impl<'a> Builder<'a> {
    /// Adds `block`'s children under node `at` and queues its connectors.
    fn expand_body(
        &mut self,
        block: &'a BlockTemplate,
        at: Option<usize>,
        scope: Option<&QualifiedName>,
        instance: Option<&QualifiedName>,
    ) {
        for child in &block.children {
            let qname = match scope {
                Some(s) => s.child(child.name().clone()),
                None => QualifiedName::single(child.name().clone()),
            };
            match child {
                Child::Owned(b) => {
                    let idx = self.push_node(qname.clone(), at, None, b);
                    self.expand_body(b, Some(idx), Some(&qname), instance);
                }
                Child::Instance { template, .. } => {
                    let t = &self.net.templates[template];
                    let idx = self.push_node(qname.clone(), at, Some(template.clone()), t);
                    self.expand_body(t, Some(idx), Some(&qname), Some(&qname));
                }
            }
        }
        for decl in &block.connectors {
            self.pending.push(Pending {
                decl,
                scope: scope.cloned(),
                scope_name: block.name.clone(),
                instance: instance.cloned(),
            });
        }
    }

    fn push_node(
        &mut self,
        qname: QualifiedName,
        parent: Option<usize>,
        template: Option<Ident>,
        shape: &BlockTemplate,
    ) -> usize {
        let idx = self.nodes.len();
        self.nodes.push(InstanceNode {
            qname: qname.clone(),
            parent,
            children: Vec::new(),
            template,
            in_ports: shape.in_ports.clone(),
            out_ports: shape.out_ports.clone(),
        });
        match parent {
            Some(p) => self.nodes[p].children.push(idx),
            None => self.roots.push(idx),
        }
        self.index.insert(qname, idx);
        idx
    }
}

fn resolve_connector(
    tree: &InstanceTree,
    p: &Pending<'_>,
) -> Result<ElabConnector, Vec<ElabError>> {
    let mut errors = Vec::new();
    let mut resolve = |path: &QualifiedName| -> Option<Endpoint> {
        let found = resolve_in_scope(tree, p.scope.as_ref(), &p.scope_name, path);
        if found.is_none() {
            errors.push(ElabError::UnresolvedEndpoint {
                path: path.clone(),
                scope: p
                    .scope
                    .as_ref()
                    .map_or_else(|| tree.net_name.to_string(), |s| s.to_string()),
                location: p.decl.loc.get(),
            });
        }
        found
    };
    let source = resolve(&p.decl.source);
    let targets: Vec<_> = p.decl.targets.iter().map(&mut resolve).collect();
    if !errors.is_empty() {
        return Err(errors);
    }

    let signal = p.decl.signal.as_ref().map(|s| match &p.instance {
        Some(inst) => inst.join(s.segments()),
        None => s.clone(),
    });
    Ok(ElabConnector {
        source: source.expect("resolved"),
        targets: targets.into_iter().map(|t| t.expect("resolved")).collect(),
        signal,
        local_signal: p.decl.signal.clone(),
        stereotype: p.decl.stereotype,
        loc: p.decl.loc,
    })
}

/// Paths are relative to the declaring scope. A leading segment naming the
/// scope itself refers to the scope: the enclosing block, or the boundary
/// for the net body. Children shadow the scope's own name.
fn resolve_in_scope(
    tree: &InstanceTree,
    scope: Option<&QualifiedName>,
    scope_name: &Ident,
    path: &QualifiedName,
) -> Option<Endpoint> {
    let absolute = |rest: &[Ident]| match scope {
        Some(s) => s.join(rest),
        None => QualifiedName::new(rest.to_vec()),
    };

    let direct = absolute(path.segments());
    if tree.contains(&direct) {
        return Some(Endpoint::Block(direct));
    }
    if path.first() != scope_name {
        return None;
    }
    if path.len() == 1 {
        return Some(match scope {
            Some(s) => Endpoint::Block(s.clone()),
            None => Endpoint::Boundary,
        });
    }
    let nested = absolute(&path.segments()[1..]);
    tree.contains(&nested).then_some(Endpoint::Block(nested))
}
