//! Semantic model of function nets and the container for everything a `.fnv`
//! file can declare.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::features::FeatureDiagram;
use crate::variants::Binding;
use crate::view::ViewDef;

/// Words that have syntactic meaning in the model language and can never be
/// used as identifiers.
pub const KEYWORDS: &[&str] = &[
    "funcnet",
    "in",
    "out",
    "def",
    "block",
    "inst",
    "connect",
    "view",
    "of",
    "env",
    "ext",
    "features",
    "feature",
    "mandatory",
    "optional",
    "alternative",
    "or",
    "binding",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid identifier `{0}`")]
pub struct InvalidIdent(pub String);

/// A block, signal, feature or declaration name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Ident(String);

impl Ident {
    pub fn new(text: impl Into<String>) -> Result<Self, InvalidIdent> {
        let text = text.into();
        if is_identifier(&text) && !KEYWORDS.contains(&text.as_str()) {
            Ok(Ident(text))
        } else {
            Err(InvalidIdent(text))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Letter or underscore followed by letters, digits, underscores.
pub fn is_identifier(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl TryFrom<String> for Ident {
    type Error = InvalidIdent;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Ident::new(value)
    }
}

impl From<Ident> for String {
    fn from(value: Ident) -> Self {
        value.0
    }
}

impl std::ops::Deref for Ident {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Ident {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A dot-separated, nonempty sequence of identifiers.
///
/// Used both for absolute instance names (`CLS.door_fl.DoorContact`) and for
/// relative paths written in connectors and views.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualifiedName {
    segments: Vec<Ident>,
}

impl QualifiedName {
    /// Panics on an empty segment list.
    pub fn new(segments: Vec<Ident>) -> Self {
        assert!(!segments.is_empty(), "qualified name needs a segment");
        QualifiedName { segments }
    }

    pub fn single(segment: Ident) -> Self {
        QualifiedName {
            segments: vec![segment],
        }
    }

    /// Parses `a.b.c`; every segment must be a valid identifier.
    pub fn parse(text: &str) -> Result<Self, InvalidIdent> {
        let segments = text
            .split('.')
            .map(|s| Ident::new(s).map_err(|_| InvalidIdent(text.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QualifiedName { segments })
    }

    pub fn segments(&self) -> &[Ident] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> &Ident {
        &self.segments[0]
    }

    pub fn last(&self) -> &Ident {
        self.segments.last().expect("nonempty")
    }

    pub fn child(&self, segment: Ident) -> Self {
        let mut segments = self.segments.clone();
        segments.push(segment);
        QualifiedName { segments }
    }

    pub fn join(&self, rest: &[Ident]) -> Self {
        let mut segments = self.segments.clone();
        segments.extend_from_slice(rest);
        QualifiedName { segments }
    }

    pub fn parent(&self) -> Option<Self> {
        (self.segments.len() > 1).then(|| QualifiedName {
            segments: self.segments[..self.segments.len() - 1].to_vec(),
        })
    }

    /// True iff `self` is a proper prefix of `other`.
    pub fn is_strict_prefix_of(&self, other: &QualifiedName) -> bool {
        self.segments.len() < other.segments.len()
            && other.segments[..self.segments.len()] == self.segments[..]
    }

    pub fn ends_with(&self, tail: &[Ident]) -> bool {
        self.segments.len() >= tail.len()
            && self.segments[self.segments.len() - tail.len()..] == *tail
    }
}

impl fmt::Display for QualifiedName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(s)?;
        }
        Ok(())
    }
}

impl From<Ident> for QualifiedName {
    fn from(value: Ident) -> Self {
        QualifiedName::single(value)
    }
}

/// 1-based position in a source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceLocation {
    pub line: u32,
    pub column: u32,
}

impl SourceLocation {
    pub fn new(line: u32, column: u32) -> Self {
        debug_assert!(line >= 1 && column >= 1);
        SourceLocation { line, column }
    }
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Location metadata attached to model elements.
///
/// Equality and hashing ignore the wrapped value, so two models compare equal
/// when they have the same structure regardless of where they were parsed from.
#[derive(Debug, Clone, Copy, Default)]
pub struct Loc(pub Option<SourceLocation>);

impl Loc {
    pub const NONE: Loc = Loc(None);

    pub fn at(line: u32, column: u32) -> Self {
        Loc(Some(SourceLocation::new(line, column)))
    }

    pub fn get(&self) -> Option<SourceLocation> {
        self.0
    }
}

impl PartialEq for Loc {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Loc {}

impl Hash for Loc {
    fn hash<H: Hasher>(&self, _: &mut H) {}
}

/// Non-digital connector kinds: mechanical, analog electrical, hydraulic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stereotype {
    M,
    E,
    H,
}

impl Stereotype {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "M" => Some(Stereotype::M),
            "E" => Some(Stereotype::E),
            "H" => Some(Stereotype::H),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stereotype::M => "M",
            Stereotype::E => "E",
            Stereotype::H => "H",
        }
    }
}

impl fmt::Display for Stereotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A directed connector as written: one source, one or more targets.
///
/// The signal is a dotted path so that instance-qualified signal names can be
/// written back out; plain signals are single-segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConnectorDecl {
    pub source: QualifiedName,
    pub targets: Vec<QualifiedName>,
    pub signal: Option<QualifiedName>,
    pub stereotype: Option<Stereotype>,
    pub loc: Loc,
}

impl ConnectorDecl {
    pub fn new(
        source: QualifiedName,
        targets: Vec<QualifiedName>,
        signal: Option<QualifiedName>,
    ) -> Self {
        ConnectorDecl {
            source,
            targets,
            signal,
            stereotype: None,
            loc: Loc::NONE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Child {
    Owned(BlockTemplate),
    Instance {
        template: Ident,
        name: Ident,
        loc: Loc,
    },
}

impl Child {
    pub fn name(&self) -> &Ident {
        match self {
            Child::Owned(b) => &b.name,
            Child::Instance { name, .. } => name,
        }
    }

    pub fn loc(&self) -> Loc {
        match self {
            Child::Owned(b) => b.loc,
            Child::Instance { loc, .. } => *loc,
        }
    }
}

/// Structure of a block: ports, nested blocks and the connectors declared in
/// its scope. Serves for reusable `def` templates, owned blocks and the body
/// of a net alike.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockTemplate {
    pub name: Ident,
    pub in_ports: BTreeSet<Ident>,
    pub out_ports: BTreeSet<Ident>,
    pub children: Vec<Child>,
    pub connectors: Vec<ConnectorDecl>,
    pub loc: Loc,
}

impl BlockTemplate {
    pub fn new(name: Ident) -> Self {
        BlockTemplate {
            name,
            in_ports: BTreeSet::new(),
            out_ports: BTreeSet::new(),
            children: Vec::new(),
            connectors: Vec::new(),
            loc: Loc::NONE,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Templates referenced by `inst` anywhere in this block's owned subtree.
    pub fn instantiated_templates(&self) -> Vec<&Ident> {
        let mut out = Vec::new();
        self.collect_instantiated(&mut out);
        out
    }

    fn collect_instantiated<'a>(&'a self, out: &mut Vec<&'a Ident>) {
        for child in &self.children {
            match child {
                Child::Owned(b) => b.collect_instantiated(out),
                Child::Instance { template, .. } => out.push(template),
            }
        }
    }
}

/// A complete function net. The body's ports are the net boundary; `def`
/// templates declared anywhere in the net share one namespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionNetDef {
    pub name: Ident,
    pub templates: BTreeMap<Ident, BlockTemplate>,
    pub body: BlockTemplate,
}

impl FunctionNetDef {
    pub fn new(name: Ident) -> Self {
        FunctionNetDef {
            body: BlockTemplate::new(name.clone()),
            name,
            templates: BTreeMap::new(),
        }
    }

    pub fn in_ports(&self) -> &BTreeSet<Ident> {
        &self.body.in_ports
    }

    pub fn out_ports(&self) -> &BTreeSet<Ident> {
        &self.body.out_ports
    }

    pub fn loc(&self) -> Loc {
        self.body.loc
    }
}

/// Everything declared in one `.fnv` file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Model {
    pub funcnets: BTreeMap<Ident, FunctionNetDef>,
    pub views: BTreeMap<Ident, ViewDef>,
    pub feature_diagrams: BTreeMap<Ident, FeatureDiagram>,
    /// Keyed by the feature diagram each binding maps.
    pub bindings: BTreeMap<Ident, Binding>,
}

impl Model {
    pub fn funcnet(&self, name: &str) -> Option<&FunctionNetDef> {
        self.funcnets.get(name)
    }

    pub fn view(&self, name: &str) -> Option<&ViewDef> {
        self.views.get(name)
    }

    pub fn feature_diagram(&self, name: &str) -> Option<&FeatureDiagram> {
        self.feature_diagrams.get(name)
    }

    pub fn binding(&self, name: &str) -> Option<&Binding> {
        self.bindings.get(name)
    }
}

#[cfg(test)]
pub(crate) fn id(s: &str) -> Ident {
    Ident::new(s).unwrap()
}

#[cfg(test)]
pub(crate) fn qn(s: &str) -> QualifiedName {
    QualifiedName::parse(s).unwrap()
}
