//! Feature diagrams: mandatory/optional subfeatures and alternative/or
//! groups, their valid configurations, and analytic counting.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagnostics::{sort_diagnostics, Code, Diagnostic};
use crate::model::{Ident, Loc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Mandatory,
    Optional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Exactly one member.
    Alternative,
    /// Any nonempty combination of members.
    Or,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureChild {
    Sub {
        modality: Modality,
        node: FeatureNode,
    },
    Group {
        kind: GroupKind,
        members: Vec<FeatureNode>,
        loc: Loc,
    },
}

impl FeatureChild {
    pub fn nodes(&self) -> &[FeatureNode] {
        match self {
            FeatureChild::Sub { node, .. } => std::slice::from_ref(node),
            FeatureChild::Group { members, .. } => members,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureNode {
    pub name: Ident,
    pub children: Vec<FeatureChild>,
    pub loc: Loc,
}

impl FeatureNode {
    pub fn leaf(name: Ident) -> Self {
        FeatureNode {
            name,
            children: Vec::new(),
            loc: Loc::NONE,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.iter().all(|c| c.nodes().is_empty())
    }

    /// Direct subfeatures, whether grouped or not.
    pub fn subfeatures(&self) -> impl Iterator<Item = &FeatureNode> {
        self.children.iter().flat_map(|c| c.nodes().iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDiagram {
    pub name: Ident,
    pub root: FeatureNode,
    pub loc: Loc,
}

/// A set of selected features accepted by a diagram.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub selected: BTreeSet<Ident>,
    pub variant_id: String,
}

impl Configuration {
    pub fn contains(&self, feature: &str) -> bool {
        self.selected.contains(feature)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown feature `{0}`")]
pub struct UnknownFeature(pub String);

impl FeatureDiagram {
    /// All features in depth-first diagram order.
    pub fn features(&self) -> Vec<&FeatureNode> {
        fn walk<'a>(n: &'a FeatureNode, out: &mut Vec<&'a FeatureNode>) {
            out.push(n);
            for c in n.subfeatures() {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureNode> {
        self.features()
            .into_iter()
            .find(|f| f.name.as_str() == name)
    }

    /// Parent of every non-root feature.
    pub fn parents(&self) -> BTreeMap<&Ident, &Ident> {
        let mut out = BTreeMap::new();
        for f in self.features() {
            for c in f.subfeatures() {
                out.insert(&c.name, &f.name);
            }
        }
        out
    }

    /// Builds the configuration for `selected`, deriving its variant id from
    /// the selected features none of whose subfeatures are selected, in
    /// diagram order (`vS1S2`). A configuration selecting only the root is
    /// named after the root.
    pub fn configuration(&self, selected: BTreeSet<Ident>) -> Configuration {
        let mut id = String::from("v");
        for f in self.features().into_iter().skip(1) {
            if selected.contains(&f.name) && !f.subfeatures().any(|c| selected.contains(&c.name)) {
                id.push_str(&f.name);
            }
        }
        if id.len() == 1 {
            id.push_str(&self.root.name);
        }
        Configuration {
            selected,
            variant_id: id,
        }
    }
}

/// F1 duplicate feature names, F2 groups with fewer than two members.
pub fn validate_diagram(fd: &FeatureDiagram) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut seen = BTreeSet::new();
    for f in fd.features() {
        if !seen.insert(&f.name) {
            diags.push(
                Diagnostic::error(
                    Code::F1,
                    format!("{}:{}", fd.name, f.name),
                    format!("feature `{}` is declared more than once", f.name),
                )
                .at(f.loc.get()),
            );
        }
        for c in &f.children {
            if let FeatureChild::Group { kind, members, loc } = c {
                if members.len() < 2 {
                    let kind = match kind {
                        GroupKind::Alternative => "alternative",
                        GroupKind::Or => "or",
                    };
                    diags.push(
                        Diagnostic::error(
                            Code::F2,
                            format!("{}:{}", fd.name, f.name),
                            format!(
                                "{kind} group has {} member(s); at least 2 are required",
                                members.len()
                            ),
                        )
                        .at(loc.get()),
                    );
                }
            }
        }
    }
    sort_diagnostics(&mut diags);
    diags
}

pub fn is_valid_configuration(
    fd: &FeatureDiagram,
    selected: &BTreeSet<Ident>,
) -> Result<bool, UnknownFeature> {
    let features = fd.features();
    let known: BTreeSet<&Ident> = features.iter().map(|f| &f.name).collect();
    if let Some(unknown) = selected.iter().find(|s| !known.contains(s)) {
        return Err(UnknownFeature(unknown.to_string()));
    }
    if !selected.contains(&fd.root.name) {
        return Ok(false);
    }
    let is = |n: &FeatureNode| selected.contains(&n.name);
    for f in features {
        if !is(f) {
            if f.subfeatures().any(is) {
                return Ok(false);
            }
            continue;
        }
        for c in &f.children {
            let ok = match c {
                FeatureChild::Sub {
                    modality: Modality::Mandatory,
                    node,
                } => is(node),
                FeatureChild::Sub {
                    modality: Modality::Optional,
                    ..
                } => true,
                FeatureChild::Group {
                    kind: GroupKind::Alternative,
                    members,
                    ..
                } => members.iter().filter(|m| is(m)).count() == 1,
                FeatureChild::Group {
                    kind: GroupKind::Or,
                    members,
                    ..
                } => members.iter().any(is),
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

type Selection<'a> = Vec<&'a Ident>;

/// Selections of `node`'s subtree given that `node` is selected.
fn node_selections(node: &FeatureNode) -> Vec<Selection<'_>> {
    let mut acc: Vec<Selection<'_>> = vec![vec![&node.name]];
    for c in &node.children {
        let options = child_options(c);
        acc = acc
            .iter()
            .flat_map(|base| {
                options.iter().map(move |opt| {
                    let mut s = base.clone();
                    s.extend(opt.iter().copied());
                    s
                })
            })
            .collect();
    }
    acc
}

/// Ways a child entry can contribute once its parent is selected.
fn child_options(c: &FeatureChild) -> Vec<Selection<'_>> {
    match c {
        FeatureChild::Sub {
            modality: Modality::Mandatory,
            node,
        } => node_selections(node),
        FeatureChild::Sub {
            modality: Modality::Optional,
            node,
        } => std::iter::once(Vec::new())
            .chain(node_selections(node))
            .collect(),
        FeatureChild::Group {
            kind: GroupKind::Alternative,
            members,
            ..
        } => members.iter().flat_map(node_selections).collect(),
        FeatureChild::Group {
            kind: GroupKind::Or,
            members,
            ..
        } => {
            let mut acc: Vec<Selection<'_>> = vec![Vec::new()];
            for m in members {
                let with_m: Vec<_> = std::iter::once(Vec::new())
                    .chain(node_selections(m))
                    .collect();
                acc = acc
                    .iter()
                    .flat_map(|base| {
                        with_m.iter().map(move |opt| {
                            let mut s = base.clone();
                            s.extend(opt.iter().copied());
                            s
                        })
                    })
                    .collect();
            }
            acc.retain(|s| !s.is_empty());
            acc
        }
    }
}

/// Every valid configuration exactly once, smaller selections first and
/// equal sizes ordered by the sorted name set.
pub fn enumerate_configurations(fd: &FeatureDiagram) -> Vec<Configuration> {
    let mut sets: Vec<BTreeSet<Ident>> = node_selections(&fd.root)
        .into_iter()
        .map(|s| s.into_iter().cloned().collect())
        .collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sets.dedup();
    sets.into_iter().map(|s| fd.configuration(s)).collect()
}

/// Number of valid configurations, computed from the tree shape alone.
/// Saturates at `u128::MAX`.
pub fn count_configurations(fd: &FeatureDiagram) -> u128 {
    fn count(n: &FeatureNode) -> u128 {
        n.children.iter().fold(1u128, |acc, c| {
            let factor = match c {
                FeatureChild::Sub {
                    modality: Modality::Mandatory,
                    node,
                } => count(node),
                FeatureChild::Sub {
                    modality: Modality::Optional,
                    node,
                } => count(node).saturating_add(1),
                FeatureChild::Group {
                    kind: GroupKind::Alternative,
                    members,
                    ..
                } => members.iter().map(count).fold(0u128, u128::saturating_add),
                FeatureChild::Group {
                    kind: GroupKind::Or,
                    members,
                    ..
                } => {
                    members
                        .iter()
                        .map(|m| count(m).saturating_add(1))
                        .fold(1u128, u128::saturating_mul)
                        - 1
                }
            };
            acc.saturating_mul(factor)
        })
    }
    count(&fd.root)
}
