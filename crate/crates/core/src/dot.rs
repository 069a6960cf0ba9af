//! Graphviz export of nets, views and variant views.
//!
//! Blocks with shown sub-blocks become clusters, all other blocks become
//! box nodes. Statements inside every graph body are sorted, so the output
//! depends only on the content.

use std::collections::{BTreeMap, BTreeSet};

use crate::elaborate::{elaborate, Endpoint};
use crate::model::{Ident, Model, QualifiedName};
use crate::variants::Deriver;
use crate::view::{normalize_view, NormalizedView, ViewEndpoint};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DotError {
    #[error("`{0}` is not a funcnet, view or derivable variant")]
    UnknownTarget(String),
    #[error("`{target}` cannot be exported: {reason}")]
    Unusable { target: String, reason: String },
}

/// Exports the funcnet, view or variant named `target`, looked up in that
/// order. Variants are found by variant id across all valid bindings.
pub fn export_dot(model: &Model, target: &str) -> Result<String, DotError> {
    let unusable = |reason: String| DotError::Unusable {
        target: target.to_string(),
        reason,
    };
    if let Some(net) = model.funcnet(target) {
        let tree = elaborate(net).map_err(|errs| {
            unusable(
                errs.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            )
        })?;
        return Ok(render_dot(
            target,
            &net.name,
            &NormalizedView::of_net(&tree),
        ));
    }
    if let Some(view) = model.view(target) {
        let nv = normalize_view(model, view).map_err(|e| unusable(e.to_string()))?;
        let net = crate::view::base_net(model, view).map_err(|e| unusable(e.to_string()))?;
        return Ok(render_dot(target, &net.name, &nv));
    }
    for name in model.bindings.keys() {
        let Ok(deriver) = Deriver::new(model, name) else {
            continue;
        };
        let Ok(variants) = deriver.derive_all() else {
            continue;
        };
        if let Some(v) = variants.iter().find(|v| v.variant_id() == target) {
            return Ok(render_dot(target, &deriver.net().name, &v.content));
        }
    }
    Err(DotError::UnknownTarget(target.to_string()))
}

/// Renders normalized view content over the net named `net`.
pub fn render_dot(graph_name: &str, net: &Ident, nv: &NormalizedView) -> String {
    let shown: BTreeSet<&QualifiedName> = nv.all_blocks().collect();
    let parent_of = |q: &QualifiedName| {
        let mut p = q.parent();
        while let Some(candidate) = p {
            if shown.contains(&candidate) {
                return Some(candidate);
            }
            p = candidate.parent();
        }
        None
    };
    let mut children: BTreeMap<Option<QualifiedName>, Vec<&QualifiedName>> = BTreeMap::new();
    for q in &shown {
        children.entry(parent_of(q)).or_default().push(q);
    }

    let endpoint_id = |e: &ViewEndpoint| match e {
        ViewEndpoint::Env(n) => format!("env:{n}"),
        ViewEndpoint::Net(Endpoint::Boundary) => format!("net:{net}"),
        ViewEndpoint::Net(Endpoint::Block(q)) => q.to_string(),
    };
    let mut referenced = BTreeSet::new();
    let mut top = Vec::new();
    for c in &nv.connectors {
        let label = match (c.stereotype, &c.signal) {
            (Some(st), _) => format!(" [label={}]", quote(&format!("«{st}»"))),
            (None, Some(s)) => format!(" [label={}]", quote(&s.to_string())),
            (None, None) => String::new(),
        };
        let (s, t) = (endpoint_id(&c.source), endpoint_id(&c.target));
        top.push(format!("{} -> {}{label};", quote(&s), quote(&t)));
        for e in [&c.source, &c.target] {
            match e {
                ViewEndpoint::Net(Endpoint::Block(q)) => {
                    referenced.insert(q.clone());
                }
                ViewEndpoint::Net(Endpoint::Boundary) => {
                    top.push(format!(
                        "{} [shape=plaintext, label={}];",
                        quote(&format!("net:{net}")),
                        quote(net)
                    ));
                }
                ViewEndpoint::Env(_) => {}
            }
        }
    }
    for e in &nv.env_blocks {
        top.push(format!(
            "{} [shape=box, style=dashed, label={}];",
            quote(&format!("env:{e}")),
            quote(&format!("«env»\\n{e}"))
        ));
    }

    fn block(
        q: &QualifiedName,
        nv: &NormalizedView,
        children: &BTreeMap<Option<QualifiedName>, Vec<&QualifiedName>>,
        referenced: &BTreeSet<QualifiedName>,
        depth: usize,
    ) -> String {
        let label = if nv.ext_blocks.contains(q) {
            format!("«ext»\\n{}", q.last())
        } else {
            q.last().to_string()
        };
        let kids = children.get(&Some(q.clone()));
        let Some(kids) = kids.filter(|k| !k.is_empty()) else {
            return format!(
                "{} [shape=box, label={}];",
                quote(&q.to_string()),
                quote(&label)
            );
        };
        let mut body = vec![format!("label={};", quote(&label))];
        if referenced.contains(q) {
            body.push(format!(
                "{} [shape=point, label=\"\"];",
                quote(&q.to_string())
            ));
        }
        for k in kids {
            body.push(block(k, nv, children, referenced, depth + 1));
        }
        graph_body(
            &format!("subgraph {}", quote(&format!("cluster_{q}"))),
            body,
            depth,
        )
    }

    for q in children.get(&None).into_iter().flatten() {
        top.push(block(q, nv, &children, &referenced, 1));
    }
    let mut out = graph_body(&format!("digraph {}", quote(graph_name)), top, 0);
    out.push('\n');
    out
}

/// `header { stmts }` with sorted, deduplicated statements indented one level
/// deeper than `depth`.
fn graph_body(header: &str, mut stmts: Vec<String>, depth: usize) -> String {
    stmts.sort();
    stmts.dedup();
    let pad = "  ".repeat(depth);
    let inner = "  ".repeat(depth + 1);
    let mut out = format!("{header} {{\n");
    for s in stmts {
        // Nested subgraphs arrive already indented after their first line.
        out.push_str(&inner);
        out.push_str(&s);
        out.push('\n');
    }
    out.push_str(&pad);
    out.push('}');
    out
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\\\""))
}
