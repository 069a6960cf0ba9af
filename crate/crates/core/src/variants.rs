//! Feature-to-view bindings and variant views.
//!
//! A variant view is the union of the feature views bound to the selected
//! features of one configuration, expressed in complete-net names.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagnostics::{has_errors, sort_diagnostics, Code, Diagnostic};
use crate::features::{
    enumerate_configurations, is_valid_configuration, validate_diagram, Configuration,
    FeatureDiagram,
};
use crate::model::{FunctionNetDef, Ident, Loc, Model};
use crate::view::{base_net, check_view_def, normalize_view, render_view, NormalizedView, ViewDef};

/// Maps features of one diagram to views over one net. A binding is named
/// after its diagram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub diagram: Ident,
    pub net: Ident,
    /// Feature name to view name.
    pub entries: BTreeMap<Ident, Ident>,
    pub loc: Loc,
}

impl Binding {
    pub fn name(&self) -> &Ident {
        &self.diagram
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantView {
    pub config: Configuration,
    pub content: NormalizedView,
}

impl VariantView {
    pub fn variant_id(&self) -> &str {
        &self.config.variant_id
    }

    /// The variant as an ordinary view over `net`, named by its variant id.
    pub fn to_view_def(&self, net: &Ident) -> ViewDef {
        let name = Ident::new(self.config.variant_id.clone()).expect("variant ids are identifiers");
        render_view(name, net, &self.content)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BindingError {
    #[error("unknown binding `{0}`")]
    UnknownBinding(String),
    #[error("binding `{binding}` refers to unknown feature diagram `{diagram}`")]
    UnknownDiagram { binding: String, diagram: String },
    #[error("binding `{binding}` refers to unknown funcnet `{net}`")]
    UnknownNet { binding: String, net: String },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VariantError {
    #[error(transparent)]
    Binding(#[from] BindingError),
    #[error("binding `{0}` has errors")]
    BindingInvalid(String, Vec<Diagnostic>),
    #[error("{0}")]
    InvalidConfiguration(String),
}

struct Resolved<'m> {
    binding: &'m Binding,
    diagram: &'m FeatureDiagram,
    net: &'m FunctionNetDef,
}

fn resolve_binding<'m>(model: &'m Model, name: &str) -> Result<Resolved<'m>, BindingError> {
    let binding = model
        .binding(name)
        .ok_or_else(|| BindingError::UnknownBinding(name.to_string()))?;
    let diagram =
        model
            .feature_diagram(&binding.diagram)
            .ok_or_else(|| BindingError::UnknownDiagram {
                binding: name.to_string(),
                diagram: binding.diagram.to_string(),
            })?;
    let net = model
        .funcnet(&binding.net)
        .ok_or_else(|| BindingError::UnknownNet {
            binding: name.to_string(),
            net: binding.net.to_string(),
        })?;
    Ok(Resolved {
        binding,
        diagram,
        net,
    })
}

/// Validates the diagram, every bound view (B1), subset relations between
/// bound features and their nearest bound ancestors (B2), and reports leaf
/// features without a view (B3).
pub fn validate_binding(
    model: &Model,
    binding_name: &str,
) -> Result<Vec<Diagnostic>, BindingError> {
    let Resolved {
        binding,
        diagram,
        net,
    } = resolve_binding(model, binding_name)?;
    let subject = |s: &dyn std::fmt::Display| format!("{}:{}", binding.diagram, s);
    let loc = binding.loc.get();

    let mut diags = validate_diagram(diagram);
    let mut usable: BTreeMap<&Ident, NormalizedView> = BTreeMap::new();

    for (feature, view_name) in &binding.entries {
        let problem = if diagram.feature(feature).is_none() {
            Some(format!(
                "feature `{feature}` is not in diagram `{}`",
                diagram.name
            ))
        } else {
            match model.view(view_name) {
                None => Some(format!("bound view `{view_name}` does not exist")),
                Some(view) => {
                    view_problem(model, view, net).or_else(|| match normalize_view(model, view) {
                        Ok(nv) => {
                            usable.insert(feature, nv);
                            None
                        }
                        Err(e) => Some(e.to_string()),
                    })
                }
            }
        };
        if let Some(problem) = problem {
            diags.push(Diagnostic::error(Code::B1, subject(feature), problem).at(loc));
        }
    }

    let parents = diagram.parents();
    for (feature, nv) in &usable {
        let mut up = parents.get(feature).copied();
        while let Some(ancestor) = up {
            if binding.entries.contains_key(ancestor) {
                break;
            }
            up = parents.get(ancestor).copied();
        }
        let Some(ancestor) = up else { continue };
        let Some(ancestor_nv) = usable.get(ancestor) else {
            continue;
        };
        let missing = nv.missing_from(ancestor_nv);
        if !missing.is_empty() {
            let what: Vec<_> = missing.into_iter().map(|(_, w)| w).collect();
            diags.push(
                Diagnostic::error(
                    Code::B2,
                    subject(feature),
                    format!(
                        "view `{}` is not a subset of view `{}` bound to `{ancestor}`: {}",
                        binding.entries[*feature],
                        binding.entries[ancestor],
                        what.join(", ")
                    ),
                )
                .at(loc),
            );
        }
    }

    for f in diagram.features() {
        if f.is_leaf() && !binding.entries.contains_key(&f.name) {
            diags.push(
                Diagnostic::warning(
                    Code::B3,
                    subject(&f.name),
                    "leaf feature has no view and contributes nothing to variants",
                )
                .at(loc),
            );
        }
    }
    sort_diagnostics(&mut diags);
    Ok(diags)
}

fn view_problem(model: &Model, view: &ViewDef, net: &FunctionNetDef) -> Option<String> {
    match base_net(model, view) {
        Err(e) => return Some(e.to_string()),
        Ok(base) if base.name != net.name => {
            return Some(format!(
                "view `{}` is over `{}`, not the bound net `{}`",
                view.name, base.name, net.name
            ))
        }
        Ok(_) => {}
    }
    match check_view_def(model, view) {
        Err(e) => Some(e.to_string()),
        Ok(d) if has_errors(&d) => Some(format!("view `{}` is inconsistent", view.name)),
        Ok(_) => None,
    }
}

/// A validated binding with its feature views normalized once.
pub struct Deriver<'m> {
    diagram: &'m FeatureDiagram,
    net: &'m FunctionNetDef,
    views: BTreeMap<Ident, NormalizedView>,
}

impl<'m> Deriver<'m> {
    pub fn new(model: &'m Model, binding_name: &str) -> Result<Self, VariantError> {
        let diags = validate_binding(model, binding_name)?;
        if has_errors(&diags) {
            return Err(VariantError::BindingInvalid(
                binding_name.to_string(),
                diags,
            ));
        }
        let Resolved {
            binding,
            diagram,
            net,
        } = resolve_binding(model, binding_name)?;
        let views = binding
            .entries
            .iter()
            .map(|(f, v)| {
                let view = model.view(v).expect("validated");
                (f.clone(), normalize_view(model, view).expect("validated"))
            })
            .collect();
        Ok(Deriver {
            diagram,
            net,
            views,
        })
    }

    pub fn diagram(&self) -> &'m FeatureDiagram {
        self.diagram
    }

    pub fn net(&self) -> &'m FunctionNetDef {
        self.net
    }

    pub fn derive(&self, config: &Configuration) -> Result<VariantView, VariantError> {
        match is_valid_configuration(self.diagram, &config.selected) {
            Ok(true) => {}
            Ok(false) => {
                return Err(VariantError::InvalidConfiguration(format!(
                    "{{{}}} is not a valid configuration of `{}`",
                    config
                        .selected
                        .iter()
                        .map(Ident::as_str)
                        .collect::<Vec<_>>()
                        .join(", "),
                    self.diagram.name
                )))
            }
            Err(e) => return Err(VariantError::InvalidConfiguration(e.to_string())),
        }

        let mut content = NormalizedView::default();
        for feature in &config.selected {
            if let Some(nv) = self.views.get(feature) {
                content.blocks.extend(nv.blocks.iter().cloned());
                content.ext_blocks.extend(nv.ext_blocks.iter().cloned());
                content.env_blocks.extend(nv.env_blocks.iter().cloned());
                content.connectors.extend(nv.connectors.iter().cloned());
            }
        }
        let shown = content.blocks.clone();
        content.ext_blocks.retain(|q| !shown.contains(q));

        let signalled: BTreeSet<_> = content
            .connectors
            .iter()
            .filter(|c| c.signal.is_some())
            .map(|c| (c.source.clone(), c.target.clone(), c.stereotype))
            .collect();
        content.connectors.retain(|c| {
            c.signal.is_some()
                || !signalled.contains(&(c.source.clone(), c.target.clone(), c.stereotype))
        });

        Ok(VariantView {
            config: self.diagram.configuration(config.selected.clone()),
            content,
        })
    }

    pub fn derive_all(&self) -> Result<Vec<VariantView>, VariantError> {
        enumerate_configurations(self.diagram)
            .iter()
            .map(|c| self.derive(c))
            .collect()
    }
}

pub fn derive_variant(
    model: &Model,
    binding_name: &str,
    config: &Configuration,
) -> Result<VariantView, VariantError> {
    Deriver::new(model, binding_name)?.derive(config)
}

/// One variant per valid configuration, in enumeration order.
pub fn derive_all(model: &Model, binding_name: &str) -> Result<Vec<VariantView>, VariantError> {
    Deriver::new(model, binding_name)?.derive_all()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::model::qn;

    const FIG8: &str = "
        funcnet Net8 {
          in I; out X, Y;
          block A { in I; out X; }
          block B { in I; out Y; }
          connect Net8 -> A, B : I;
          connect A -> Net8 : X;
          connect B -> Net8 : Y;
        }
        view VS1 of Net8 { block A; connect Net8 -> A : I; connect A -> Net8 : X; }
        view VS2 of Net8 { block B; connect Net8 -> B : I; connect B -> Net8 : Y; }
        features F8 { feature Feature2 { or { feature S1; feature S2; } } }
        binding F8 -> Net8 { S1 : view VS1; S2 : view VS2; }
    ";

    #[test]
    fn or_feature_variants() {
        let m = parse(FIG8).unwrap();
        assert_eq!(validate_binding(&m, "F8").unwrap(), vec![]);
        let all = derive_all(&m, "F8").unwrap();
        let ids: Vec<_> = all.iter().map(|v| v.variant_id()).collect();
        assert_eq!(ids, vec!["vS1", "vS2", "vS1S2"]);
        let both = &all[2].content;
        assert_eq!(both.blocks, BTreeSet::from([qn("A"), qn("B")]));
        let signals: BTreeSet<_> = both
            .connectors
            .iter()
            .filter_map(|c| c.signal.clone())
            .collect();
        assert_eq!(signals, BTreeSet::from([qn("I"), qn("X"), qn("Y")]));
    }

    #[test]
    fn invalid_configuration_is_rejected() {
        let m = parse(FIG8).unwrap();
        let d = Deriver::new(&m, "F8").unwrap();
        let bad = d
            .diagram()
            .configuration(BTreeSet::from([Ident::new("Feature2").unwrap()]));
        assert!(matches!(
            d.derive(&bad),
            Err(VariantError::InvalidConfiguration(_))
        ));
    }

    #[test]
    fn binding_diagnostics() {
        let src = format!(
            "{FIG8}
            view Parent of Net8 {{ block A; }}
            view Child of view Parent {{ block A; }}
            view Wider of Net8 {{ block A; block B; }}
            features G {{ feature Root {{ optional feature P {{ optional feature C; }} optional feature Q; }} }}
            binding G -> Net8 {{ P : view Parent; C : view Wider; }}"
        );
        let m = parse(&src).unwrap();
        let codes: Vec<_> = validate_binding(&m, "G")
            .unwrap()
            .iter()
            .map(|d| d.code)
            .collect();
        assert_eq!(codes, vec![Code::B2, Code::B3]);
    }

    #[test]
    fn missing_or_foreign_views_are_b1() {
        let src = format!(
            "{FIG8}
            funcnet Other {{ block Z; }}
            view OnOther of Other {{ block Z; }}
            features G {{ feature Root {{ optional feature P; optional feature Q; }} }}
            binding G -> Net8 {{ P : view Nope; Q : view OnOther; }}"
        );
        let m = parse(&src).unwrap();
        let codes: Vec<_> = validate_binding(&m, "G")
            .unwrap()
            .iter()
            .map(|d| d.code)
            .collect();
        assert_eq!(codes, vec![Code::B1, Code::B1]);
        assert!(matches!(
            derive_all(&m, "G"),
            Err(VariantError::BindingInvalid(..))
        ));
        assert!(matches!(
            validate_binding(&m, "Nope"),
            Err(BindingError::UnknownBinding(_))
        ));
    }

    #[test]
    fn signal_less_connectors_are_absorbed() {
        let src = "
            funcnet N { block A; block B; connect A -> B : S; }
            view Vague of N { block A; block B; connect A -> B; }
            view Exact of N { block A; block B; connect A -> B : S; }
            features F { feature R { mandatory feature P; mandatory feature Q; } }
            binding F -> N { P : view Vague; Q : view Exact; }
        ";
        let m = parse(src).unwrap();
        let all = derive_all(&m, "F").unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].content.connectors.len(), 1);
        assert!(all[0].content.connectors.iter().all(|c| c.signal.is_some()));
    }
}
