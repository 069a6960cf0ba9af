mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use common::*;
use funcnet_variants::diagnostics::{has_errors, Code};
use funcnet_variants::dsl::{parse, print};
use funcnet_variants::elaborate::{elaborate, Endpoint};
use funcnet_variants::features::{
    count_configurations, enumerate_configurations, is_valid_configuration,
};
use funcnet_variants::model::Ident;
use funcnet_variants::net_check::check_funcnet;
use funcnet_variants::variants::Deriver;
use funcnet_variants::view::{
    check_view_def, render_view, ConnectorTuple, NormalizedView, ViewItem,
};

/// All subsets of the diagram's features accepted by the validity check.
fn brute_force(fd: &funcnet_variants::features::FeatureDiagram) -> BTreeSet<BTreeSet<Ident>> {
    let names: Vec<Ident> = fd.features().iter().map(|f| f.name.clone()).collect();
    (0u32..1 << names.len())
        .map(|mask| {
            names
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, n)| n.clone())
                .collect::<BTreeSet<_>>()
        })
        .filter(|s| is_valid_configuration(fd, s).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_parse_is_identity(m in model()) {
        let text = print(&m);
        let back = parse(&text).map_err(|d| TestCaseError::fail(format!("{d:?}\n{text}")))?;
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(print(&back), text);
    }

    #[test]
    fn count_matches_enumeration_and_brute_force(fd in feature_diagram(12)) {
        let configs = enumerate_configurations(&fd);
        prop_assert_eq!(count_configurations(&fd), configs.len() as u128);
        let listed: BTreeSet<_> = configs.iter().map(|c| c.selected.clone()).collect();
        prop_assert_eq!(listed.len(), configs.len());
        prop_assert_eq!(listed, brute_force(&fd));
    }

    #[test]
    fn variant_ids_are_unique(fd in feature_diagram(10)) {
        let configs = enumerate_configurations(&fd);
        let ids: BTreeSet<_> = configs.iter().map(|c| c.variant_id.clone()).collect();
        prop_assert_eq!(ids.len(), configs.len());
    }

    #[test]
    fn descendant_relation_is_a_strict_partial_order(shape in net_shape()) {
        let tree = elaborate(&shape.to_net()).unwrap();
        let names: Vec<_> = tree.nodes().iter().map(|n| n.qname.clone()).collect();
        let d = |a, b| tree.is_descendant(a, b).unwrap();
        for a in &names {
            prop_assert!(!d(a, a));
            for b in &names {
                if d(a, b) {
                    prop_assert!(!d(b, a));
                    for c in &names {
                        if d(b, c) {
                            prop_assert!(d(a, c));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn n1_iff_a_signal_has_two_senders(shape in net_shape()) {
        let net = shape.to_net();
        let mut senders: BTreeMap<u8, BTreeSet<Option<usize>>> = BTreeMap::new();
        for s in &shape.boundary_in {
            senders.entry(*s).or_default().insert(None);
        }
        for (src, _, sig) in &shape.connectors {
            senders.entry(*sig).or_default().insert(*src);
        }
        let expected: BTreeSet<String> = senders
            .iter()
            .filter(|(_, s)| s.len() > 1)
            .map(|(sig, _)| format!("N:S{sig}"))
            .collect();
        let reported: BTreeSet<String> = check_funcnet(&net)
            .into_iter()
            .filter(|d| d.code == Code::N1)
            .map(|d| d.subject)
            .collect();
        prop_assert_eq!(reported, expected);
    }

    #[test]
    fn adding_a_second_sender_triggers_n1(shape in net_shape(), pick in any::<prop::sample::Index>()) {
        let mut net = shape.to_net();
        prop_assume!(!net.body.connectors.is_empty());
        let c = pick.get(&net.body.connectors).clone();
        let blocks: Vec<_> = (0..shape.parents.len()).map(|i| shape.block_path(i)).collect();
        let Some(other) = blocks.iter().find(|b| **b != c.source && !c.targets.contains(b)) else {
            return Ok(());
        };
        let mut dup = c.clone();
        dup.source = other.clone();
        net.body.connectors.push(dup);
        let n1: Vec<_> = check_funcnet(&net)
            .into_iter()
            .filter(|d| d.code == Code::N1)
            .map(|d| d.subject)
            .collect();
        let expected = format!("N:{}", c.signal.unwrap());
        prop_assert!(n1.contains(&expected), "{:?} lacks {}", n1, expected);
    }

    #[test]
    fn projections_and_their_deletions_are_consistent(
        shape in net_shape(),
        keep in prop::collection::vec(any::<bool>(), 12),
        drop in any::<prop::sample::Index>(),
    ) {
        let net = shape.to_net();
        let mut model = funcnet_variants::model::Model::default();
        model.funcnets.insert(net.name.clone(), net.clone());
        let tree = elaborate(&net).unwrap();
        prop_assume!(!has_errors(&check_funcnet(&net)));

        // Keep a subset of blocks and the connectors among them.
        let full = NormalizedView::of_net(&tree);
        let mut nv = NormalizedView::default();
        for (i, b) in full.blocks.iter().enumerate() {
            if keep[i % keep.len()] {
                nv.blocks.insert(b.clone());
            }
        }
        let shown = |e: &funcnet_variants::view::ViewEndpoint| match e {
            funcnet_variants::view::ViewEndpoint::Net(Endpoint::Block(q)) => nv.blocks.contains(q),
            _ => true,
        };
        let kept: Vec<ConnectorTuple> = full
            .connectors
            .iter()
            .filter(|c| shown(&c.source) && shown(&c.target))
            .cloned()
            .collect();
        nv.connectors.extend(kept);

        let view = render_view(id("P"), &net.name, &nv);
        let diags = check_view_def(&model, &view).unwrap();
        prop_assert!(!has_errors(&diags), "{:?}", diags);

        prop_assume!(!view.items.is_empty());
        let mut smaller = view.clone();
        smaller.items.remove(drop.index(view.items.len()));
        let diags = check_view_def(&model, &smaller).unwrap();
        prop_assert!(!has_errors(&diags), "{:?}", diags);
    }
}

fn contains(big: &NormalizedView, small: &NormalizedView) -> bool {
    let big_blocks: BTreeSet<_> = big.all_blocks().collect();
    small.all_blocks().all(|b| big_blocks.contains(b))
        && small.env_blocks.is_subset(&big.env_blocks)
        && small.connectors.iter().all(|c| {
            big.connectors.contains(c)
                || (c.signal.is_none()
                    && big.connectors.iter().any(|b| {
                        b.source == c.source && b.target == c.target && b.stereotype == c.stereotype
                    }))
        })
}

#[test]
fn variants_grow_with_their_selection() {
    for name in FIXTURES {
        let model = load(name);
        for b in model.bindings.keys() {
            let d = Deriver::new(&model, b).unwrap();
            let all = d.derive_all().unwrap();
            for small in &all {
                for big in &all {
                    if small.config.selected.is_subset(&big.config.selected) {
                        assert!(
                            contains(&big.content, &small.content),
                            "{} not within {}",
                            small.variant_id(),
                            big.variant_id()
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn variants_are_the_union_of_selected_feature_views() {
    for name in FIXTURES {
        let model = load(name);
        for (b, binding) in &model.bindings {
            let d = Deriver::new(&model, b).unwrap();
            for v in d.derive_all().unwrap() {
                let mut union = NormalizedView::default();
                for f in &v.config.selected {
                    if let Some(view) = binding.entries.get(f) {
                        let nv = funcnet_variants::view::normalize_view(
                            &model,
                            model.view(view).unwrap(),
                        )
                        .unwrap();
                        union.blocks.extend(nv.blocks);
                        union.ext_blocks.extend(nv.ext_blocks);
                        union.env_blocks.extend(nv.env_blocks);
                        union.connectors.extend(nv.connectors);
                    }
                }
                // Every variant element comes from some selected view ...
                assert!(contains(&union, &v.content), "{}", v.variant_id());
                // ... and every selected view element survives in the variant.
                assert!(contains(&v.content, &union), "{}", v.variant_id());
                assert!(v.content.ext_blocks.is_disjoint(&v.content.blocks));
            }
        }
    }
}

#[test]
fn rendered_variants_reparse_to_the_same_view() {
    for name in FIXTURES {
        let model = load(name);
        for b in model.bindings.keys() {
            let d = Deriver::new(&model, b).unwrap();
            for v in d.derive_all().unwrap() {
                let view = v.to_view_def(&d.net().name);
                let text = funcnet_variants::dsl::print_view(&view);
                let back = parse(&text).unwrap();
                assert_eq!(back.view(v.variant_id()), Some(&view));
                assert!(back.views.values().all(|v| !v
                    .items
                    .iter()
                    .any(|i| matches!(i, ViewItem::Connect(c) if c.targets.len() != 1))));
            }
        }
    }
}
