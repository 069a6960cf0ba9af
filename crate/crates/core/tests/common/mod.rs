#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use proptest::prelude::*;
use proptest::sample::Index;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

use funcnet_variants::dsl::parse;
use funcnet_variants::features::{FeatureChild, FeatureDiagram, FeatureNode, GroupKind, Modality};
use funcnet_variants::model::{
    BlockTemplate, Child, ConnectorDecl, FunctionNetDef, Ident, Loc, Model, QualifiedName,
    Stereotype,
};
use funcnet_variants::variants::Binding;
use funcnet_variants::view::{BaseKind, ViewBase, ViewBlock, ViewDef, ViewItem};

pub const FIXTURES: [&str; 4] = ["cls.fnv", "alternative.fnv", "or_group.fnv", "optional.fnv"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn load(name: &str) -> Model {
    parse(&fixture_text(name)).unwrap_or_else(|d| panic!("{name}: {d:?}"))
}

pub fn id(s: &str) -> Ident {
    Ident::new(s).unwrap()
}

pub fn qn(s: &str) -> QualifiedName {
    QualifiedName::parse(s).unwrap()
}

/// `n` deterministic samples of `strategy`.
pub fn samples<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::deterministic();
    (0..n)
        .map(|_| strategy.new_tree(&mut runner).unwrap().current())
        .collect()
}

// ---- syntactic models, for print/parse round trips ----

pub fn ident() -> impl Strategy<Value = Ident> {
    "[A-Z][A-Za-z0-9_]{0,4}".prop_map(|s| Ident::new(s).unwrap())
}

pub fn path() -> impl Strategy<Value = QualifiedName> {
    prop::collection::vec(ident(), 1..4).prop_map(QualifiedName::new)
}

fn stereotype() -> impl Strategy<Value = Stereotype> {
    prop_oneof![
        Just(Stereotype::M),
        Just(Stereotype::E),
        Just(Stereotype::H)
    ]
}

pub fn connector() -> impl Strategy<Value = ConnectorDecl> {
    (
        path(),
        prop::collection::vec(path(), 1..4),
        prop::option::of(path()),
        prop::option::of(stereotype()),
    )
        .prop_map(|(source, targets, signal, stereotype)| ConnectorDecl {
            source,
            targets,
            signal,
            stereotype,
            loc: Loc::NONE,
        })
}

fn ports() -> impl Strategy<Value = BTreeSet<Ident>> {
    prop::collection::btree_set(ident(), 0..3)
}

fn dedup_children(children: Vec<Child>) -> Vec<Child> {
    let mut seen = BTreeSet::new();
    children
        .into_iter()
        .filter(|c| seen.insert(c.name().clone()))
        .collect()
}

pub fn block() -> impl Strategy<Value = BlockTemplate> {
    let leaf = (ident(), ports(), ports()).prop_map(|(name, i, o)| BlockTemplate {
        in_ports: i,
        out_ports: o,
        ..BlockTemplate::new(name)
    });
    leaf.prop_recursive(3, 16, 4, |inner| {
        let child = prop_oneof![
            inner.prop_map(Child::Owned),
            (ident(), ident()).prop_map(|(template, name)| Child::Instance {
                template,
                name,
                loc: Loc::NONE
            }),
        ];
        (
            ident(),
            ports(),
            ports(),
            prop::collection::vec(child, 0..4),
            prop::collection::vec(connector(), 0..3),
        )
            .prop_map(|(name, i, o, children, connectors)| BlockTemplate {
                in_ports: i,
                out_ports: o,
                children: dedup_children(children),
                connectors,
                ..BlockTemplate::new(name)
            })
    })
}

pub fn funcnet() -> impl Strategy<Value = FunctionNetDef> {
    (ident(), prop::collection::vec(block(), 0..3), block()).prop_map(|(name, templates, body)| {
        let mut net = FunctionNetDef::new(name.clone());
        net.body = BlockTemplate { name, ..body };
        net.templates = templates.into_iter().map(|t| (t.name.clone(), t)).collect();
        net
    })
}

pub fn view_items() -> impl Strategy<Value = Vec<ViewItem>> {
    let leaf = prop_oneof![
        path().prop_map(|p| ViewItem::Block(ViewBlock::new(p))),
        ident().prop_map(|name| ViewItem::Env {
            name,
            loc: Loc::NONE
        }),
        path().prop_map(|path| ViewItem::Ext {
            path,
            loc: Loc::NONE
        }),
        connector().prop_map(ViewItem::Connect),
    ];
    let item = leaf.prop_recursive(3, 16, 4, |inner| {
        (path(), prop::collection::vec(inner, 0..4)).prop_map(|(p, items)| {
            ViewItem::Block(ViewBlock {
                items,
                ..ViewBlock::new(p)
            })
        })
    });
    prop::collection::vec(item, 0..5)
}

pub fn view_def() -> impl Strategy<Value = ViewDef> {
    (ident(), ident(), any::<bool>(), view_items()).prop_map(|(name, base, of_view, items)| {
        ViewDef {
            name,
            base: ViewBase {
                name: base,
                kind: if of_view {
                    BaseKind::View
                } else {
                    BaseKind::Net
                },
            },
            items,
            loc: Loc::NONE,
        }
    })
}

pub fn binding() -> impl Strategy<Value = Binding> {
    (
        ident(),
        ident(),
        prop::collection::btree_map(ident(), ident(), 0..4),
    )
        .prop_map(|(diagram, net, entries)| Binding {
            diagram,
            net,
            entries,
            loc: Loc::NONE,
        })
}

pub fn model() -> impl Strategy<Value = Model> {
    (
        prop::collection::vec(funcnet(), 0..3),
        prop::collection::vec(view_def(), 0..3),
        prop::collection::vec(feature_diagram(8), 0..3),
        prop::collection::vec(binding(), 0..3),
    )
        .prop_map(|(nets, views, fds, bindings)| Model {
            funcnets: nets.into_iter().map(|n| (n.name.clone(), n)).collect(),
            views: views.into_iter().map(|v| (v.name.clone(), v)).collect(),
            feature_diagrams: fds.into_iter().map(|f| (f.name.clone(), f)).collect(),
            bindings: bindings
                .into_iter()
                .map(|b| (b.diagram.clone(), b))
                .collect(),
        })
}

// ---- feature diagrams ----

/// How a feature hangs below its parent. Group slots let one parent own
/// several groups of the same kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Attach {
    Mandatory,
    Optional,
    Alternative(u8),
    Or(u8),
}

/// Structurally valid diagrams with `1..=max_features` features named
/// `F0` (root) to `F{n-1}`. One-member groups become optional subfeatures.
pub fn feature_diagram(max_features: usize) -> impl Strategy<Value = FeatureDiagram> {
    (1..=max_features)
        .prop_flat_map(|n| {
            (
                ident(),
                prop::collection::vec((any::<Index>(), 0u8..4, 0u8..2), n - 1),
            )
        })
        .prop_map(|(name, links)| {
            let links: Vec<(usize, Attach)> = links
                .iter()
                .enumerate()
                .map(|(i, (parent, kind, slot))| {
                    let attach = match kind {
                        0 => Attach::Mandatory,
                        1 => Attach::Optional,
                        2 => Attach::Alternative(*slot),
                        _ => Attach::Or(*slot),
                    };
                    (parent.index(i + 1), attach)
                })
                .collect();
            FeatureDiagram {
                name,
                root: build_feature(0, &links),
                loc: Loc::NONE,
            }
        })
}

fn build_feature(index: usize, links: &[(usize, Attach)]) -> FeatureNode {
    let mut node = FeatureNode::leaf(id(&format!("F{index}")));
    let mut groups: BTreeMap<Attach, Vec<FeatureNode>> = BTreeMap::new();
    for (i, (parent, attach)) in links.iter().enumerate() {
        if *parent != index {
            continue;
        }
        let child = build_feature(i + 1, links);
        match attach {
            Attach::Mandatory | Attach::Optional => node.children.push(FeatureChild::Sub {
                modality: if *attach == Attach::Mandatory {
                    Modality::Mandatory
                } else {
                    Modality::Optional
                },
                node: child,
            }),
            group => groups.entry(*group).or_default().push(child),
        }
    }
    for (attach, mut members) in groups {
        if members.len() == 1 {
            node.children.push(FeatureChild::Sub {
                modality: Modality::Optional,
                node: members.pop().unwrap(),
            });
            continue;
        }
        let kind = match attach {
            Attach::Alternative(_) => GroupKind::Alternative,
            _ => GroupKind::Or,
        };
        node.children.push(FeatureChild::Group {
            kind,
            members,
            loc: Loc::NONE,
        });
    }
    node
}

// ---- semantically shaped nets ----

/// A hierarchical net `N` with owned blocks `B1..Bn`, instances of a
/// two-leaf template `T` and top-level connectors over signals `S0..S4`.
/// Connector sources never appear among their targets.
#[derive(Debug, Clone)]
pub struct NetShape {
    /// Parent block index per block; `None` for top level.
    pub parents: Vec<Option<usize>>,
    /// Owning block per `T` instance.
    pub instances: Vec<Option<usize>>,
    /// Signal indices entering through the boundary.
    pub boundary_in: BTreeSet<u8>,
    /// Source (block index or `None` for the boundary), targets, signal.
    pub connectors: Vec<(Option<usize>, BTreeSet<Option<usize>>, u8)>,
}

pub fn net_shape() -> impl Strategy<Value = NetShape> {
    (1usize..10)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(prop::option::of(any::<Index>()), n),
                prop::collection::vec(prop::option::of(any::<Index>()), 0..3),
                prop::collection::btree_set(0u8..5, 0..3),
                prop::collection::vec(
                    (
                        prop::option::of(0..n),
                        prop::collection::btree_set(prop::option::of(0..n), 1..3),
                        0u8..5,
                    ),
                    0..8,
                ),
            )
        })
        .prop_map(|(parents, instances, boundary_in, connectors)| {
            let n = parents.len();
            NetShape {
                // Block i may only nest under an earlier block.
                parents: parents
                    .iter()
                    .enumerate()
                    .map(|(i, p)| p.filter(|_| i > 0).map(|p| p.index(i)))
                    .collect(),
                instances: instances.iter().map(|p| p.map(|p| p.index(n))).collect(),
                boundary_in,
                connectors: connectors
                    .into_iter()
                    .filter_map(|(s, mut ts, sig)| {
                        ts.remove(&s);
                        (!ts.is_empty()).then_some((s, ts, sig))
                    })
                    .collect(),
            }
        })
}

impl NetShape {
    pub fn block_path(&self, i: usize) -> QualifiedName {
        let mut segs = vec![id(&format!("B{}", i + 1))];
        let mut p = self.parents[i];
        while let Some(j) = p {
            segs.push(id(&format!("B{}", j + 1)));
            p = self.parents[j];
        }
        segs.reverse();
        QualifiedName::new(segs)
    }

    fn endpoint(&self, e: Option<usize>) -> QualifiedName {
        e.map_or_else(|| qn("N"), |i| self.block_path(i))
    }

    pub fn to_net(&self) -> FunctionNetDef {
        let mut net = FunctionNetDef::new(id("N"));
        let mut t = BlockTemplate::new(id("T"));
        t.children.push(Child::Owned(BlockTemplate::new(id("L1"))));
        t.children.push(Child::Owned(BlockTemplate::new(id("L2"))));
        t.connectors.push(ConnectorDecl::new(
            qn("L1"),
            vec![qn("L2")],
            Some(qn("Inner")),
        ));
        net.templates.insert(id("T"), t);

        fn build(shape: &NetShape, owner: Option<usize>) -> Vec<Child> {
            let mut out = Vec::new();
            for (i, p) in shape.parents.iter().enumerate() {
                if *p == owner {
                    let mut b = BlockTemplate::new(id(&format!("B{}", i + 1)));
                    b.children = build(shape, Some(i));
                    out.push(Child::Owned(b));
                }
            }
            for (k, p) in shape.instances.iter().enumerate() {
                if *p == owner {
                    out.push(Child::Instance {
                        template: id("T"),
                        name: id(&format!("t{k}")),
                        loc: Loc::NONE,
                    });
                }
            }
            out
        }
        net.body.children = build(self, None);
        net.body.in_ports = self
            .boundary_in
            .iter()
            .map(|s| id(&format!("S{s}")))
            .collect();
        for (s, ts, sig) in &self.connectors {
            net.body.connectors.push(ConnectorDecl::new(
                self.endpoint(*s),
                ts.iter().map(|t| self.endpoint(*t)).collect(),
                Some(qn(&format!("S{sig}"))),
            ));
        }
        net
    }
}
