//! Views over a complete function net and their consistency checks.
//!
//! A view shows a subset of the net's blocks and connectors, possibly
//! skipping intermediate layers, and may add environment blocks connected by
//! non-digital stimulation. Every non-environment element must resolve to a
//! block of the complete net. Views of views must additionally be subsets
//! of the view they specialize.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::diagnostics::{has_errors, sort_diagnostics, Code, Diagnostic};
use crate::elaborate::{elaborate, Endpoint, InstanceTree};
use crate::model::{ConnectorDecl, FunctionNetDef, Ident, Loc, Model, QualifiedName, Stereotype};
use crate::net_check::check_net;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseKind {
    Net,
    View,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewBase {
    pub name: Ident,
    pub kind: BaseKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewDef {
    pub name: Ident,
    pub base: ViewBase,
    pub items: Vec<ViewItem>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViewItem {
    Block(ViewBlock),
    Env { name: Ident, loc: Loc },
    Ext { path: QualifiedName, loc: Loc },
    Connect(ConnectorDecl),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewBlock {
    pub path: QualifiedName,
    pub items: Vec<ViewItem>,
    pub loc: Loc,
}

impl ViewBlock {
    pub fn new(path: QualifiedName) -> Self {
        ViewBlock {
            path,
            items: Vec::new(),
            loc: Loc::NONE,
        }
    }
}

impl ViewDef {
    pub fn new(name: Ident, base: Ident, kind: BaseKind) -> Self {
        ViewDef {
            name,
            base: ViewBase { name: base, kind },
            items: Vec::new(),
            loc: Loc::NONE,
        }
    }

    /// Environment block names declared anywhere in the view.
    pub fn env_names(&self) -> BTreeSet<Ident> {
        fn walk(items: &[ViewItem], out: &mut BTreeSet<Ident>) {
            for item in items {
                match item {
                    ViewItem::Env { name, .. } => {
                        out.insert(name.clone());
                    }
                    ViewItem::Block(b) => walk(&b.items, out),
                    _ => {}
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(&self.items, &mut out);
        out
    }
}

/// Endpoint of a view connector after resolution.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViewEndpoint {
    Net(Endpoint),
    Env(Ident),
}

impl ViewEndpoint {
    pub fn is_env(&self) -> bool {
        matches!(self, ViewEndpoint::Env(_))
    }
}

impl fmt::Display for ViewEndpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViewEndpoint::Net(e) => e.fmt(f),
            ViewEndpoint::Env(n) => write!(f, "env {n}"),
        }
    }
}

/// A single-target connector in complete-net terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConnectorTuple {
    pub source: ViewEndpoint,
    pub target: ViewEndpoint,
    pub signal: Option<QualifiedName>,
    pub stereotype: Option<Stereotype>,
}

impl fmt::Display for ConnectorTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -", self.source)?;
        if let Some(st) = self.stereotype {
            write!(f, "[{st}]")?;
        }
        write!(f, "> {}", self.target)?;
        if let Some(s) = &self.signal {
            write!(f, " : {s}")?;
        }
        Ok(())
    }
}

/// A view's content expressed with complete-net names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NormalizedView {
    pub blocks: BTreeSet<QualifiedName>,
    pub ext_blocks: BTreeSet<QualifiedName>,
    pub env_blocks: BTreeSet<Ident>,
    pub connectors: BTreeSet<ConnectorTuple>,
}

impl NormalizedView {
    pub fn all_blocks(&self) -> impl Iterator<Item = &QualifiedName> {
        self.blocks.iter().chain(self.ext_blocks.iter())
    }

    /// Normalizes every element of a complete net.
    pub fn of_net(tree: &InstanceTree) -> Self {
        let mut nv = NormalizedView {
            blocks: tree.nodes().iter().map(|n| n.qname.clone()).collect(),
            ..Default::default()
        };
        for c in &tree.connectors {
            for t in &c.targets {
                nv.connectors.insert(ConnectorTuple {
                    source: ViewEndpoint::Net(c.source.clone()),
                    target: ViewEndpoint::Net(t.clone()),
                    signal: c.signal.clone(),
                    stereotype: c.stereotype,
                });
            }
        }
        nv
    }

    /// Elements of `self` not contained in `base`, as human-readable strings.
    ///
    /// A connector is contained if `base` shows the same endpoints and
    /// stereotype with the same signal, or with the signal omitted on
    /// either side.
    pub fn missing_from(&self, base: &NormalizedView) -> Vec<(String, String)> {
        let base_blocks: BTreeSet<_> = base.all_blocks().collect();
        let mut out = Vec::new();
        for b in self.all_blocks() {
            if !base_blocks.contains(b) {
                out.push((b.to_string(), format!("block `{b}`")));
            }
        }
        for e in &self.env_blocks {
            if !base.env_blocks.contains(e) {
                out.push((e.to_string(), format!("env block `{e}`")));
            }
        }
        for c in &self.connectors {
            let present = base.connectors.iter().any(|b| {
                b.source == c.source
                    && b.target == c.target
                    && b.stereotype == c.stereotype
                    && (b.signal.is_none() || c.signal.is_none() || b.signal == c.signal)
            });
            if !present {
                out.push((c.source.to_string(), format!("connector `{c}`")));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("unknown view `{0}`")]
    UnknownView(String),
    #[error("unknown funcnet `{0}`")]
    UnknownNet(String),
    #[error("view `{view}` refers to unknown base `{base}`")]
    UnknownBase { view: String, base: String },
    #[error("cyclic view base chain: {}", .0.join(" -> "))]
    BaseCycle(Vec<String>),
    #[error("base funcnet `{0}` has errors")]
    BaseNetInvalid(String),
}

/// Follows the base chain of `view` to its complete net.
pub fn base_net<'m>(model: &'m Model, view: &ViewDef) -> Result<&'m FunctionNetDef, CheckError> {
    let mut seen = vec![view.name.to_string()];
    let mut base = &view.base;
    let mut from = view.name.as_str();
    loop {
        match base.kind {
            BaseKind::Net => {
                return model
                    .funcnet(&base.name)
                    .ok_or_else(|| CheckError::UnknownBase {
                        view: from.to_string(),
                        base: base.name.to_string(),
                    })
            }
            BaseKind::View => {
                if seen.iter().any(|s| s == base.name.as_str()) {
                    seen.push(base.name.to_string());
                    return Err(CheckError::BaseCycle(seen));
                }
                seen.push(base.name.to_string());
                let next = model
                    .view(&base.name)
                    .ok_or_else(|| CheckError::UnknownBase {
                        view: from.to_string(),
                        base: base.name.to_string(),
                    })?;
                from = next.name.as_str();
                base = &next.base;
            }
        }
    }
}

/// Elaborates the base net of `view`, refusing nets with errors.
fn complete_tree(model: &Model, view: &ViewDef) -> Result<InstanceTree, CheckError> {
    let net = base_net(model, view)?;
    let diags =
        check_net(model, &net.name).map_err(|_| CheckError::UnknownNet(net.name.to_string()))?;
    if has_errors(&diags) {
        return Err(CheckError::BaseNetInvalid(net.name.to_string()));
    }
    elaborate(net).map_err(|_| CheckError::BaseNetInvalid(net.name.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    #[error("`{0}` is not part of the complete function net")]
    NotFound(QualifiedName),
    #[error("`{path}` is ambiguous ({}); use a longer dotted path", join_names(.candidates))]
    Ambiguous {
        path: QualifiedName,
        candidates: Vec<QualifiedName>,
    },
}

fn join_names(names: &[QualifiedName]) -> String {
    names
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn lookup(
    tree: &InstanceTree,
    scope: Option<&QualifiedName>,
    path: &QualifiedName,
) -> Result<QualifiedName, ResolveError> {
    if tree.contains(path) && scope.is_none_or(|s| s.is_strict_prefix_of(path)) {
        return Ok(path.clone());
    }
    match tree.find_by_suffix(scope, path.segments()).as_slice() {
        [one] => Ok((*one).clone()),
        [] => Err(ResolveError::NotFound(path.clone())),
        many => Err(ResolveError::Ambiguous {
            path: path.clone(),
            candidates: many.iter().map(|q| (*q).clone()).collect(),
        }),
    }
}

/// Resolves a view block path to a block of the complete net.
///
/// Inside a view block (`scope`), the path is searched among the strict
/// descendants of the scope's resolution, so intermediate layers may be
/// left out; at top level the whole tree is searched. A path that names
/// an absolute block exactly takes precedence over suffix matches. When
/// nothing matches inside the scope, the whole tree is searched so that a
/// block present elsewhere in the net is reported as misplaced rather than
/// missing.
pub fn resolve_view_block(
    tree: &InstanceTree,
    scope: Option<&QualifiedName>,
    path: &QualifiedName,
) -> Result<QualifiedName, ResolveError> {
    match lookup(tree, scope, path) {
        Err(ResolveError::NotFound(_)) if scope.is_some() => lookup(tree, None, path),
        other => other,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ElementKind {
    Shown,
    Ext,
}

#[derive(Debug)]
struct Element {
    path: QualifiedName,
    subject: String,
    kind: ElementKind,
    resolution: Option<QualifiedName>,
    parent: Option<usize>,
    loc: Loc,
}

#[derive(Debug)]
struct Connector<'v> {
    decl: &'v ConnectorDecl,
    subject: String,
    source: Option<ViewEndpoint>,
    targets: Vec<Option<ViewEndpoint>>,
}

/// A view with every element resolved against the complete net.
#[derive(Debug)]
struct Resolution<'v> {
    elements: Vec<Element>,
    env: BTreeSet<Ident>,
    connectors: Vec<Connector<'v>>,
    diagnostics: Vec<Diagnostic>,
}

fn resolve<'v>(view: &'v ViewDef, tree: &InstanceTree) -> Resolution<'v> {
    let mut r = Resolution {
        elements: Vec::new(),
        env: view.env_names(),
        connectors: Vec::new(),
        diagnostics: Vec::new(),
    };
    walk_items(view, tree, &view.items, None, None, "", &mut r);

    let mut owner: BTreeMap<&QualifiedName, &Element> = BTreeMap::new();
    for e in &r.elements {
        if let Some(q) = &e.resolution {
            if let Some(first) = owner.get(q) {
                r.diagnostics.push(
                    Diagnostic::error(
                        Code::R1,
                        e.subject.clone(),
                        format!("resolves to `{q}`, which `{}` already shows", first.subject),
                    )
                    .at(e.loc.get()),
                );
            } else {
                owner.insert(q, e);
            }
        }
        if e.kind == ElementKind::Shown && e.path.len() == 1 && r.env.contains(e.path.first()) {
            r.diagnostics.push(
                Diagnostic::error(
                    Code::R1,
                    e.subject.clone(),
                    format!("`{}` is declared both as env block and as block", e.path),
                )
                .at(e.loc.get()),
            );
        }
    }
    r
}

fn walk_items<'v>(
    view: &'v ViewDef,
    tree: &InstanceTree,
    items: &'v [ViewItem],
    scope: Option<&QualifiedName>,
    parent: Option<usize>,
    prefix: &str,
    r: &mut Resolution<'v>,
) {
    let subject_of = |path: &QualifiedName| {
        if prefix.is_empty() {
            format!("{}:{}", view.name, path)
        } else {
            format!("{prefix}/{path}")
        }
    };

    for item in items {
        match item {
            ViewItem::Block(b) => {
                let subject = subject_of(&b.path);
                let idx = push_element(
                    tree,
                    scope,
                    parent,
                    &b.path,
                    ElementKind::Shown,
                    subject.clone(),
                    b.loc,
                    r,
                );
                let resolution = r.elements[idx].resolution.clone();
                walk_items(
                    view,
                    tree,
                    &b.items,
                    resolution.as_ref(),
                    Some(idx),
                    &subject,
                    r,
                );
            }
            ViewItem::Ext { path, loc } => {
                push_element(
                    tree,
                    scope,
                    parent,
                    path,
                    ElementKind::Ext,
                    subject_of(path),
                    *loc,
                    r,
                );
            }
            ViewItem::Env { .. } => {}
            ViewItem::Connect(decl) => {
                let subject = subject_of(&decl.source);
                let mut endpoint = |path: &QualifiedName| {
                    let found = resolve_endpoint(tree, &r.env, scope, path);
                    if let Err(e) = &found {
                        r.diagnostics.push(
                            Diagnostic::error(
                                Code::R1,
                                subject.clone(),
                                format!("connector endpoint {e}"),
                            )
                            .at(decl.loc.get()),
                        );
                    }
                    found.ok()
                };
                let source = endpoint(&decl.source);
                let targets = decl.targets.iter().map(&mut endpoint).collect();
                r.connectors.push(Connector {
                    decl,
                    subject,
                    source,
                    targets,
                });
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn push_element(
    tree: &InstanceTree,
    scope: Option<&QualifiedName>,
    parent: Option<usize>,
    path: &QualifiedName,
    kind: ElementKind,
    subject: String,
    loc: Loc,
    r: &mut Resolution<'_>,
) -> usize {
    let resolution = match resolve_view_block(tree, scope, path) {
        Ok(q) => Some(q),
        Err(e) => {
            r.diagnostics
                .push(Diagnostic::error(Code::R1, subject.clone(), e.to_string()).at(loc.get()));
            None
        }
    };
    r.elements.push(Element {
        path: path.clone(),
        subject,
        kind,
        resolution,
        parent,
        loc,
    });
    r.elements.len() - 1
}

/// Env names first, then blocks, then the net boundary by the net's name.
fn resolve_endpoint(
    tree: &InstanceTree,
    env: &BTreeSet<Ident>,
    scope: Option<&QualifiedName>,
    path: &QualifiedName,
) -> Result<ViewEndpoint, ResolveError> {
    if path.len() == 1 && env.contains(path.first()) {
        return Ok(ViewEndpoint::Env(path.first().clone()));
    }
    match resolve_view_block(tree, scope, path) {
        Ok(q) => Ok(ViewEndpoint::Net(Endpoint::Block(q))),
        Err(ResolveError::NotFound(_)) if path.len() == 1 && *path.first() == tree.net_name => {
            Ok(ViewEndpoint::Net(Endpoint::Boundary))
        }
        Err(e) => Err(e),
    }
}

impl Resolution<'_> {
    fn is_view_ancestor(&self, ancestor: usize, mut of: usize) -> bool {
        while let Some(p) = self.elements[of].parent {
            if p == ancestor {
                return true;
            }
            of = p;
        }
        false
    }

    fn check_nesting(&self, out: &mut Vec<Diagnostic>) {
        for e in &self.elements {
            let (Some(p), Some(child)) = (e.parent, &e.resolution) else {
                continue;
            };
            let Some(parent) = &self.elements[p].resolution else {
                continue;
            };
            if !parent.is_strict_prefix_of(child) {
                out.push(
                    Diagnostic::error(
                        Code::R2,
                        e.subject.clone(),
                        format!(
                            "`{child}` is nested in `{parent}` in the view but is not a part of it"
                        ),
                    )
                    .at(e.loc.get()),
                );
            }
        }
    }

    fn check_hidden_relations(&self, out: &mut Vec<Diagnostic>) {
        for (i, whole) in self.elements.iter().enumerate() {
            let Some(wq) = &whole.resolution else {
                continue;
            };
            for (j, part) in self.elements.iter().enumerate() {
                let Some(pq) = &part.resolution else { continue };
                if wq.is_strict_prefix_of(pq) && !self.is_view_ancestor(i, j) {
                    out.push(
                        Diagnostic::error(
                            Code::R3,
                            part.subject.clone(),
                            format!("`{pq}` is part of `{wq}` in the net but not nested in it in the view"),
                        )
                        .at(part.loc.get()),
                    );
                }
            }
        }
    }

    fn check_communication(&self, tree: &InstanceTree, out: &mut Vec<Diagnostic>) {
        for c in &self.connectors {
            if c.decl.stereotype.is_some() {
                continue;
            }
            let Some(ViewEndpoint::Net(source)) = &c.source else {
                continue;
            };
            for target in &c.targets {
                let Some(ViewEndpoint::Net(target)) = target else {
                    continue;
                };
                let mut between = tree.connectors_between(source, target);
                let ok = match &c.decl.signal {
                    Some(s) => between.any(|n| n.carries(s)),
                    None => between.any(|n| n.signal.is_some()),
                };
                if !ok {
                    let what = match &c.decl.signal {
                        Some(s) => format!("signal `{s}`"),
                        None => "any signal".to_string(),
                    };
                    out.push(
                        Diagnostic::error(
                            Code::R4,
                            c.subject.clone(),
                            format!("the net sends no {what} from `{source}` to `{target}`"),
                        )
                        .at(c.decl.loc.get()),
                    );
                }
            }
        }
    }

    fn normalize(&self, tree: &InstanceTree) -> NormalizedView {
        let mut nv = NormalizedView {
            env_blocks: self.env.clone(),
            ..Default::default()
        };
        for e in &self.elements {
            if let Some(q) = &e.resolution {
                match e.kind {
                    ElementKind::Shown => nv.blocks.insert(q.clone()),
                    ElementKind::Ext => nv.ext_blocks.insert(q.clone()),
                };
            }
        }
        let shown = nv.blocks.clone();
        nv.ext_blocks.retain(|q| !shown.contains(q));

        for c in &self.connectors {
            let Some(source) = &c.source else { continue };
            for target in c.targets.iter().flatten() {
                nv.connectors.insert(ConnectorTuple {
                    source: source.clone(),
                    target: target.clone(),
                    signal: normalize_signal(tree, source, target, c.decl),
                    stereotype: c.decl.stereotype,
                });
            }
        }
        nv
    }
}

/// Replaces a written signal name by its instance-qualified net name when
/// exactly one net signal between the endpoints matches it.
fn normalize_signal(
    tree: &InstanceTree,
    source: &ViewEndpoint,
    target: &ViewEndpoint,
    decl: &ConnectorDecl,
) -> Option<QualifiedName> {
    let written = decl.signal.as_ref()?;
    if let (ViewEndpoint::Net(s), ViewEndpoint::Net(t)) = (source, target) {
        let full: BTreeSet<_> = tree
            .connectors_between(s, t)
            .filter(|c| c.carries(written))
            .filter_map(|c| c.signal.as_ref())
            .collect();
        if let [only] = full.into_iter().collect::<Vec<_>>().as_slice() {
            return Some((*only).clone());
        }
    }
    Some(written.clone())
}

/// Checks the named view. See [`check_view_def`].
pub fn check_view(model: &Model, view_name: &str) -> Result<Vec<Diagnostic>, CheckError> {
    let view = model
        .view(view_name)
        .ok_or_else(|| CheckError::UnknownView(view_name.to_string()))?;
    check_view_def(model, view)
}

/// Checks a view, which need not be registered in `model`, against its
/// complete net and, for views of views, against its base view.
pub fn check_view_def(model: &Model, view: &ViewDef) -> Result<Vec<Diagnostic>, CheckError> {
    let tree = complete_tree(model, view)?;
    let r = resolve(view, &tree);
    let mut diags = r.diagnostics.clone();
    r.check_nesting(&mut diags);
    r.check_hidden_relations(&mut diags);
    r.check_communication(&tree, &mut diags);

    if view.base.kind == BaseKind::View {
        let base = model.view(&view.base.name).expect("base chain checked");
        let base_diags = check_view_def(model, base)?;
        if has_errors(&base_diags) {
            diags.push(
                Diagnostic::error(
                    Code::R6,
                    view.name.to_string(),
                    format!(
                        "base view `{}` is not consistent with the complete net",
                        base.name
                    ),
                )
                .at(view.loc.get()),
            );
        }
        let base_nv = resolve(base, &tree).normalize(&tree);
        for (subject, what) in r.normalize(&tree).missing_from(&base_nv) {
            diags.push(
                Diagnostic::error(
                    Code::R6,
                    format!("{}:{subject}", view.name),
                    format!("{what} is not shown in base view `{}`", base.name),
                )
                .at(view.loc.get()),
            );
        }
    }
    sort_diagnostics(&mut diags);
    Ok(diags)
}

/// Content of a view in complete-net names, ignoring its consistency.
pub fn normalize_view(model: &Model, view: &ViewDef) -> Result<NormalizedView, CheckError> {
    let net = base_net(model, view)?;
    let tree = elaborate(net).map_err(|_| CheckError::BaseNetInvalid(net.name.to_string()))?;
    Ok(resolve(view, &tree).normalize(&tree))
}

/// Renders normalized content as a view over `net`.
///
/// Blocks are nested by complete-net ancestry among the shown blocks and use
/// absolute paths; connectors sit at top level, one per target.
pub fn render_view(name: Ident, net: &Ident, nv: &NormalizedView) -> ViewDef {
    let mut view = ViewDef::new(name, net.clone(), BaseKind::Net);

    let all: BTreeSet<&QualifiedName> = nv.all_blocks().collect();
    let parent_of = |q: &QualifiedName| {
        let mut p = q.parent();
        while let Some(candidate) = p {
            if all.contains(&candidate) {
                return Some(candidate);
            }
            p = candidate.parent();
        }
        None
    };

    fn build(
        q: &QualifiedName,
        nv: &NormalizedView,
        children: &BTreeMap<Option<QualifiedName>, Vec<&QualifiedName>>,
    ) -> ViewItem {
        if nv.ext_blocks.contains(q) {
            return ViewItem::Ext {
                path: q.clone(),
                loc: Loc::NONE,
            };
        }
        let mut b = ViewBlock::new(q.clone());
        for c in children.get(&Some(q.clone())).into_iter().flatten() {
            b.items.push(build(c, nv, children));
        }
        ViewItem::Block(b)
    }

    let mut children: BTreeMap<Option<QualifiedName>, Vec<&QualifiedName>> = BTreeMap::new();
    for q in &all {
        children.entry(parent_of(q)).or_default().push(q);
    }
    for e in &nv.env_blocks {
        view.items.push(ViewItem::Env {
            name: e.clone(),
            loc: Loc::NONE,
        });
    }
    for q in children.get(&None).into_iter().flatten() {
        view.items.push(build(q, nv, &children));
    }
    let path_of = |e: &ViewEndpoint| match e {
        ViewEndpoint::Env(n) => QualifiedName::single(n.clone()),
        ViewEndpoint::Net(Endpoint::Boundary) => QualifiedName::single(net.clone()),
        ViewEndpoint::Net(Endpoint::Block(q)) => q.clone(),
    };
    for c in &nv.connectors {
        view.items.push(ViewItem::Connect(ConnectorDecl {
            source: path_of(&c.source),
            targets: vec![path_of(&c.target)],
            signal: c.signal.clone(),
            stereotype: c.stereotype,
            loc: Loc::NONE,
        }));
    }
    view
}

/// The complete net rendered verbatim as a view of itself.
pub fn view_of_net(name: Ident, tree: &InstanceTree) -> ViewDef {
    render_view(name, &tree.net_name, &NormalizedView::of_net(tree))
}
