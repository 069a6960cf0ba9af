//! Canonical text form of a model. Parsing the output yields a structurally
//! equal model.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::features::{FeatureChild, FeatureDiagram, FeatureNode, GroupKind, Modality};
use crate::model::{BlockTemplate, Child, ConnectorDecl, FunctionNetDef, Ident, Model};
use crate::variants::Binding;
use crate::view::{BaseKind, ViewDef, ViewItem};

const INDENT: &str = "  ";

pub fn print(model: &Model) -> String {
    let mut sections = Vec::new();
    sections.extend(model.funcnets.values().map(print_funcnet));
    sections.extend(model.views.values().map(print_view));
    sections.extend(model.feature_diagrams.values().map(print_features));
    sections.extend(model.bindings.values().map(print_binding));
    let mut out = sections.join("\n");
    if out.is_empty() {
        return out;
    }
    if !out.ends_with('\n') {
        out.push('\n');
    }
    out
}

pub fn print_funcnet(net: &FunctionNetDef) -> String {
    let mut out = String::new();
    writeln!(out, "funcnet {} {{", net.name).unwrap();
    write_ports(&mut out, &net.body, 1);
    for (name, t) in &net.templates {
        line(&mut out, 1, format_args!("def {name} {{"));
        write_block_body(&mut out, t, 2);
        line(&mut out, 1, format_args!("}}"));
    }
    write_children(&mut out, &net.body, 1);
    write_connectors(&mut out, &net.body.connectors, 1);
    out.push_str("}\n");
    out
}

pub fn print_view(view: &ViewDef) -> String {
    let mut out = String::new();
    let of = match view.base.kind {
        BaseKind::Net => "",
        BaseKind::View => "view ",
    };
    writeln!(out, "view {} of {of}{} {{", view.name, view.base.name).unwrap();
    write_view_items(&mut out, &view.items, 1);
    out.push_str("}\n");
    out
}

pub fn print_features(fd: &FeatureDiagram) -> String {
    let mut out = String::new();
    writeln!(out, "features {} {{", fd.name).unwrap();
    if fd.root.children.is_empty() {
        line(&mut out, 1, format_args!("feature {}", fd.root.name));
    } else {
        line(&mut out, 1, format_args!("feature {} {{", fd.root.name));
        write_feature_children(&mut out, &fd.root, 2);
        line(&mut out, 1, format_args!("}}"));
    }
    out.push_str("}\n");
    out
}

pub fn print_binding(b: &Binding) -> String {
    let mut out = String::new();
    writeln!(out, "binding {} -> {} {{", b.diagram, b.net).unwrap();
    for (feature, view) in &b.entries {
        line(&mut out, 1, format_args!("{feature} : view {view};"));
    }
    out.push_str("}\n");
    out
}

fn line(out: &mut String, depth: usize, args: std::fmt::Arguments<'_>) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
    out.write_fmt(args).unwrap();
    out.push('\n');
}

fn port_list(ports: &BTreeSet<Ident>) -> String {
    ports
        .iter()
        .map(Ident::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

fn write_ports(out: &mut String, b: &BlockTemplate, depth: usize) {
    if !b.in_ports.is_empty() {
        line(out, depth, format_args!("in {};", port_list(&b.in_ports)));
    }
    if !b.out_ports.is_empty() {
        line(out, depth, format_args!("out {};", port_list(&b.out_ports)));
    }
}

fn write_block_body(out: &mut String, b: &BlockTemplate, depth: usize) {
    write_ports(out, b, depth);
    write_children(out, b, depth);
    write_connectors(out, &b.connectors, depth);
}

fn write_children(out: &mut String, b: &BlockTemplate, depth: usize) {
    for child in &b.children {
        match child {
            Child::Instance { template, name, .. } => {
                line(out, depth, format_args!("inst {template} {name};"))
            }
            Child::Owned(c)
                if c.children.is_empty()
                    && c.connectors.is_empty()
                    && c.in_ports.is_empty()
                    && c.out_ports.is_empty() =>
            {
                line(out, depth, format_args!("block {};", c.name))
            }
            Child::Owned(c) => {
                line(out, depth, format_args!("block {} {{", c.name));
                write_block_body(out, c, depth + 1);
                line(out, depth, format_args!("}}"));
            }
        }
    }
}

fn write_connectors(out: &mut String, cs: &[ConnectorDecl], depth: usize) {
    for c in cs {
        line(out, depth, format_args!("{}", connector_text(c)));
    }
}

fn connector_text(c: &ConnectorDecl) -> String {
    let arrow = match c.stereotype {
        Some(st) => format!("-[{st}]->"),
        None => "->".to_string(),
    };
    let targets = c
        .targets
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ");
    match &c.signal {
        Some(s) => format!("connect {} {arrow} {targets} : {s};", c.source),
        None => format!("connect {} {arrow} {targets};", c.source),
    }
}

fn write_view_items(out: &mut String, items: &[ViewItem], depth: usize) {
    for item in items {
        match item {
            ViewItem::Block(b) if b.items.is_empty() => {
                line(out, depth, format_args!("block {};", b.path))
            }
            ViewItem::Block(b) => {
                line(out, depth, format_args!("block {} {{", b.path));
                write_view_items(out, &b.items, depth + 1);
                line(out, depth, format_args!("}}"));
            }
            ViewItem::Env { name, .. } => line(out, depth, format_args!("env {name};")),
            ViewItem::Ext { path, .. } => line(out, depth, format_args!("ext {path};")),
            ViewItem::Connect(c) => line(out, depth, format_args!("{}", connector_text(c))),
        }
    }
}

fn write_feature(out: &mut String, node: &FeatureNode, prefix: &str, depth: usize) {
    if node.children.is_empty() {
        line(out, depth, format_args!("{prefix}feature {};", node.name));
    } else {
        line(out, depth, format_args!("{prefix}feature {} {{", node.name));
        write_feature_children(out, node, depth + 1);
        line(out, depth, format_args!("}}"));
    }
}

fn write_feature_children(out: &mut String, node: &FeatureNode, depth: usize) {
    for child in &node.children {
        match child {
            FeatureChild::Sub { modality, node } => {
                let prefix = match modality {
                    Modality::Mandatory => "mandatory ",
                    Modality::Optional => "optional ",
                };
                write_feature(out, node, prefix, depth);
            }
            FeatureChild::Group { kind, members, .. } => {
                let kw = match kind {
                    GroupKind::Alternative => "alternative",
                    GroupKind::Or => "or",
                };
                line(out, depth, format_args!("{kw} {{"));
                for m in members {
                    write_feature(out, m, "", depth + 1);
                }
                line(out, depth, format_args!("}}"));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    #[test]
    fn canonical_layout() {
        let src = "funcnet N { block A { connect X -> Y : S; block X; block Y; } in I; def T { } inst T t; block B; }";
        let printed = print(&parse(src).unwrap());
        assert_eq!(
            printed,
            "funcnet N {
  in I;
  def T {
  }
  block A {
    block X;
    block Y;
    connect X -> Y : S;
  }
  inst T t;
  block B;
}
"
        );
        assert_eq!(print(&parse(&printed).unwrap()), printed);
    }

    #[test]
    fn sections_in_kind_order() {
        let src = "binding F -> N { B : view V; A : view W; }
features F { feature R { alternative { feature A; feature B; } } }
view V of view W { env E; connect E -[M]-> N.A; ext A.B; }
funcnet N { }";
        let m = parse(src).unwrap();
        let printed = print(&m);
        assert_eq!(
            printed,
            "funcnet N {
}

view V of view W {
  env E;
  connect E -[M]-> N.A;
  ext A.B;
}

features F {
  feature R {
    alternative {
      feature A;
      feature B;
    }
  }
}

binding F -> N {
  A : view W;
  B : view V;
}
"
        );
        assert_eq!(parse(&printed).unwrap(), m);
    }

    #[test]
    fn leaf_root() {
        let m = parse("features F { feature Car; }").unwrap();
        assert_eq!(print(&m), "features F {\n  feature Car\n}\n");
        assert_eq!(parse(&print(&m)).unwrap(), m);
    }

    #[test]
    fn empty_model() {
        assert_eq!(print(&Model::default()), "");
    }
}
