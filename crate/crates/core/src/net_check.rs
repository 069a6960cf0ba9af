//! Well-formedness of a complete function net.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagnostics::{sort_diagnostics, Code, Diagnostic};
use crate::elaborate::{elaborate_partial, ElabError, Endpoint, InstanceTree};
use crate::model::{BlockTemplate, Child, FunctionNetDef, Model, QualifiedName};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown funcnet `{0}`")]
pub struct UnknownNet(pub String);

/// Runs the N1–N6 rules on the named net. An empty result means the net is a
/// valid complete function net.
pub fn check_net(model: &Model, net_name: &str) -> Result<Vec<Diagnostic>, UnknownNet> {
    let net = model
        .funcnet(net_name)
        .ok_or_else(|| UnknownNet(net_name.to_string()))?;
    Ok(check_funcnet(net))
}

pub fn check_funcnet(net: &FunctionNetDef) -> Vec<Diagnostic> {
    let subject = |s: &dyn std::fmt::Display| format!("{}:{}", net.name, s);
    let (tree, errors) = elaborate_partial(net);

    let mut diags: Vec<Diagnostic> = errors
        .iter()
        .map(|e| {
            let code = match e {
                ElabError::UnresolvedEndpoint { .. } => Code::N2,
                _ => Code::N5,
            };
            Diagnostic::error(code, subject(&e.subject()), e.to_string()).at(e.location())
        })
        .collect();

    connector_kinds(net, &mut diags);

    if let Some(tree) = tree {
        self_loops(net, &tree, &mut diags);
        multiple_senders(net, &tree, &mut diags);
        unused_ports(net, &tree, &mut diags);
    }
    sort_diagnostics(&mut diags);
    diags
}

/// N4, checked on declarations so each offending connector is reported once.
fn connector_kinds(net: &FunctionNetDef, diags: &mut Vec<Diagnostic>) {
    fn walk(net: &FunctionNetDef, block: &BlockTemplate, path: &str, diags: &mut Vec<Diagnostic>) {
        for c in &block.connectors {
            let problem = match (&c.signal, c.stereotype) {
                (_, Some(st)) => Some(format!("carries the non-digital stereotype «{st}»")),
                (None, None) => Some("has no signal".to_string()),
                _ => None,
            };
            if let Some(problem) = problem {
                diags.push(
                    Diagnostic::error(
                        Code::N4,
                        format!("{}:{path}", net.name),
                        format!("connector from `{}` {problem}", c.source),
                    )
                    .at(c.loc.get()),
                );
            }
        }
        for child in &block.children {
            if let Child::Owned(b) = child {
                walk(net, b, &format!("{path}.{}", b.name), diags);
            }
        }
    }
    walk(net, &net.body, net.name.as_str(), diags);
    for (name, t) in &net.templates {
        walk(net, t, name.as_str(), diags);
    }
}

fn self_loops(net: &FunctionNetDef, tree: &InstanceTree, diags: &mut Vec<Diagnostic>) {
    for c in &tree.connectors {
        if c.targets.contains(&c.source) {
            diags.push(
                Diagnostic::error(
                    Code::N3,
                    format!("{}:{}", net.name, c.source),
                    format!("connector from `{}` targets its own source", c.source),
                )
                .at(c.loc.get()),
            );
        }
    }
}

/// Sending endpoints per signal. A boundary `in` port counts as a sender
/// of its signal whether or not a connector carries it.
pub fn senders(tree: &InstanceTree) -> BTreeMap<QualifiedName, BTreeSet<Endpoint>> {
    let mut out: BTreeMap<QualifiedName, BTreeSet<Endpoint>> = BTreeMap::new();
    for p in &tree.in_ports {
        out.entry(QualifiedName::single(p.clone()))
            .or_default()
            .insert(Endpoint::Boundary);
    }
    for c in &tree.connectors {
        if let Some(s) = &c.signal {
            out.entry(s.clone()).or_default().insert(c.source.clone());
        }
    }
    out
}

fn multiple_senders(net: &FunctionNetDef, tree: &InstanceTree, diags: &mut Vec<Diagnostic>) {
    for (signal, from) in senders(tree) {
        if from.len() > 1 {
            let list = from
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(", ");
            let loc = tree
                .connectors
                .iter()
                .filter(|c| c.signal.as_ref() == Some(&signal))
                .nth(1)
                .and_then(|c| c.loc.get());
            diags.push(
                Diagnostic::error(
                    Code::N1,
                    format!("{}:{signal}", net.name),
                    format!("signal has {} senders: {list}", from.len()),
                )
                .at(loc),
            );
        }
    }
}

/// N6: a port is used when a connector carrying its signal enters (for
/// `in`) or leaves (for `out`) the owning block's subtree, or the boundary.
fn unused_ports(net: &FunctionNetDef, tree: &InstanceTree, diags: &mut Vec<Diagnostic>) {
    let used = |port: &QualifiedName, owner: &Endpoint, incoming: bool| {
        tree.connectors.iter().filter(|c| c.carries(port)).any(|c| {
            // Seen from inside the net, boundary inputs leave the boundary.
            let incoming = incoming != (*owner == Endpoint::Boundary);
            if incoming {
                c.targets.iter().any(|t| t.is_within(owner))
            } else {
                c.source.is_within(owner)
            }
        })
    };
    let mut report = |owner: &Endpoint, ports: &BTreeSet<crate::model::Ident>, incoming: bool| {
        for p in ports {
            let port = QualifiedName::single(p.clone());
            if !used(&port, owner, incoming) {
                let (who, dir) = match owner {
                    Endpoint::Boundary => {
                        (net.name.to_string(), if incoming { "in" } else { "out" })
                    }
                    Endpoint::Block(q) => (q.to_string(), if incoming { "in" } else { "out" }),
                };
                diags.push(Diagnostic::warning(
                    Code::N6,
                    format!("{}:{who}", net.name),
                    format!("{dir} port `{p}` is never used by a connector"),
                ));
            }
        }
    };
    report(&Endpoint::Boundary, &tree.in_ports, true);
    report(&Endpoint::Boundary, &tree.out_ports, false);
    for node in tree.nodes() {
        let owner = Endpoint::Block(node.qname.clone());
        report(&owner, &node.in_ports, true);
        report(&owner, &node.out_ports, false);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::model::qn;
    use crate::model::{id, ConnectorDecl, Stereotype};

    fn codes(src: &str) -> Vec<Code> {
        let m = parse(src).unwrap();
        let name = m.funcnets.keys().next().unwrap().clone();
        check_net(&m, &name)
            .unwrap()
            .iter()
            .map(|d| d.code)
            .collect()
    }

    #[test]
    fn clean_net() {
        assert_eq!(
            codes("funcnet N { block A; block B; connect A -> B : S; }"),
            vec![]
        );
    }

    #[test]
    fn two_senders() {
        let m = parse(
            "funcnet N { block A; block B; block C; connect A -> C : S; connect B -> C : S; }",
        )
        .unwrap();
        let d = check_net(&m, "N").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::N1);
        assert_eq!(d[0].subject, "N:S");
    }

    #[test]
    fn multiple_receivers_are_fine() {
        assert_eq!(
            codes("funcnet N { block A; block B; block C; connect A -> B : S; connect A -> C : S; connect A -> B, C : S; }"),
            vec![]
        );
    }

    #[test]
    fn unused_port_warns() {
        let m = parse("funcnet N { block A { in Speed; } block B; connect A -> B : S; }").unwrap();
        let d = check_net(&m, "N").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::N6);
        assert!(!d[0].is_error());
    }

    #[test]
    fn boundary_ports() {
        assert_eq!(
            codes("funcnet N { in I; out O; block A; connect N -> A : I; connect A -> N : O; }"),
            vec![]
        );
        assert_eq!(codes("funcnet N { in I; block A; }"), vec![Code::N6]);
        // boundary input shadowed by an internal sender
        assert_eq!(
            codes("funcnet N { in I; block A; block B; connect N -> A : I; connect B -> A : I; }"),
            vec![Code::N1]
        );
    }

    #[test]
    fn endpoint_and_loop_errors() {
        assert_eq!(
            codes("funcnet N { block A; connect A -> Ghost : S; }"),
            vec![Code::N2]
        );
        assert_eq!(
            codes("funcnet N { block A; block B; connect A -> B, A : S; }"),
            vec![Code::N3]
        );
        assert_eq!(
            codes("funcnet N { block A; block B; connect A -> B; }"),
            vec![Code::N4]
        );
        assert_eq!(
            codes("funcnet N { block A; block B; connect A -[H]-> B : S; }"),
            vec![Code::N4]
        );
    }

    #[test]
    fn template_errors() {
        assert_eq!(
            codes("funcnet N { def T { inst T t; } inst T x; }"),
            vec![Code::N5]
        );
        assert_eq!(codes("funcnet N { inst Missing x; }"), vec![Code::N5]);
    }

    #[test]
    fn programmatic_connector_kinds() {
        let mut m = parse("funcnet N { block A; block B; }").unwrap();
        let net = m.funcnets.get_mut("N").unwrap();
        let mut c = ConnectorDecl::new(qn("A"), vec![qn("B")], Some(qn("S")));
        c.stereotype = Some(Stereotype::E);
        net.body.connectors.push(c);
        net.body
            .children
            .push(Child::Owned(BlockTemplate::new(id("C"))));
        assert_eq!(
            check_net(&m, "N")
                .unwrap()
                .iter()
                .map(|d| d.code)
                .collect::<Vec<_>>(),
            vec![Code::N4]
        );
    }

    #[test]
    fn unknown_net() {
        assert_eq!(
            check_net(&Model::default(), "X"),
            Err(UnknownNet("X".into()))
        );
    }
}
