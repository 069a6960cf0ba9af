//! Recursive-descent parser for `.fnv` files.
//!
//! Parsing stops at the first syntax error. Duplicate declarations are
//! collected and reported together; any error means no model is returned.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashSet};

use super::lexer::{tokenize, Token, TokenKind};
use crate::diagnostics::{Code, Diagnostic};
use crate::features::{FeatureChild, FeatureDiagram, FeatureNode, GroupKind, Modality};
use crate::model::{
    BlockTemplate, Child, ConnectorDecl, FunctionNetDef, Ident, Loc, Model, QualifiedName,
    SourceLocation, Stereotype, KEYWORDS,
};
use crate::variants::Binding;
use crate::view::{BaseKind, ViewBase, ViewBlock, ViewDef, ViewItem};

pub fn parse(text: &str) -> Result<Model, Vec<Diagnostic>> {
    let tokens = tokenize(text).map_err(|e| vec![p0(e.message, e.loc)])?;
    let mut p = Parser {
        tokens,
        pos: 0,
        errors: Vec::new(),
    };
    match p.model() {
        Ok(model) if p.errors.is_empty() => Ok(model),
        Ok(_) => Err(p.errors),
        Err(e) => {
            p.errors.push(e);
            p.errors.sort_by_key(|d| d.location);
            Err(p.errors)
        }
    }
}

fn p0(message: impl Into<String>, loc: SourceLocation) -> Diagnostic {
    Diagnostic::error(Code::P0, loc.to_string(), message).at(Some(loc))
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    /// Non-fatal declaration errors.
    errors: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Word(w) if w == word)
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn unexpected<T>(&self, expected: &str) -> PResult<T> {
        let t = self.peek();
        Err(p0(format!("expected {expected}, found {}", t.kind), t.loc))
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<SourceLocation> {
        if self.at(&kind) {
            Ok(self.next().loc)
        } else {
            self.unexpected(&kind.to_string())
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if self.at_word(word) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, word: &str) -> PResult<SourceLocation> {
        if self.at_word(word) {
            Ok(self.next().loc)
        } else {
            self.unexpected(&format!("`{word}`"))
        }
    }

    fn ident(&mut self) -> PResult<(Ident, SourceLocation)> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Word(w) if KEYWORDS.contains(&w.as_str()) => Err(p0(
                format!("`{w}` is a reserved keyword and cannot be used as a name"),
                t.loc,
            )),
            TokenKind::Word(w) => {
                self.next();
                Ok((
                    Ident::new(w.clone()).expect("lexer words are identifiers"),
                    t.loc,
                ))
            }
            _ => self.unexpected("a name"),
        }
    }

    fn path(&mut self) -> PResult<(QualifiedName, SourceLocation)> {
        let (first, loc) = self.ident()?;
        let mut segments = vec![first];
        while self.eat(&TokenKind::Dot) {
            segments.push(self.ident()?.0);
        }
        Ok((QualifiedName::new(segments), loc))
    }

    fn duplicate(&mut self, what: &str, name: &Ident, loc: SourceLocation) {
        self.errors
            .push(p0(format!("duplicate {what} `{name}`"), loc));
    }

    fn model(&mut self) -> PResult<Model> {
        let mut model = Model::default();
        loop {
            if self.at(&TokenKind::Eof) {
                return Ok(model);
            } else if self.at_word("funcnet") {
                let (net, loc) = self.funcnet()?;
                if model.funcnets.contains_key(&net.name) {
                    self.duplicate("funcnet", &net.name, loc);
                } else {
                    model.funcnets.insert(net.name.clone(), net);
                }
            } else if self.at_word("view") {
                let (view, loc) = self.view()?;
                if model.views.contains_key(&view.name) {
                    self.duplicate("view", &view.name, loc);
                } else {
                    model.views.insert(view.name.clone(), view);
                }
            } else if self.at_word("features") {
                let (fd, loc) = self.features()?;
                if model.feature_diagrams.contains_key(&fd.name) {
                    self.duplicate("feature diagram", &fd.name, loc);
                } else {
                    model.feature_diagrams.insert(fd.name.clone(), fd);
                }
            } else if self.at_word("binding") {
                let (b, loc) = self.binding()?;
                if model.bindings.contains_key(&b.diagram) {
                    self.duplicate("binding for", &b.diagram, loc);
                } else {
                    model.bindings.insert(b.diagram.clone(), b);
                }
            } else {
                return self.unexpected("`funcnet`, `view`, `features` or `binding`");
            }
        }
    }

    fn funcnet(&mut self) -> PResult<(FunctionNetDef, SourceLocation)> {
        let kw = self.expect_word("funcnet")?;
        let (name, loc) = self.ident()?;
        let mut net = FunctionNetDef::new(name);
        net.body.loc = Loc(Some(kw));
        self.expect(TokenKind::LBrace)?;
        let mut templates = BTreeMap::new();
        self.net_items(&mut net.body, &mut templates)?;
        net.templates = templates;
        Ok((net, loc))
    }

    /// Items up to and including the closing brace.
    fn net_items(
        &mut self,
        block: &mut BlockTemplate,
        templates: &mut BTreeMap<Ident, BlockTemplate>,
    ) -> PResult<()> {
        let mut names = HashSet::new();
        loop {
            if self.eat(&TokenKind::RBrace) {
                return Ok(());
            }
            if self.at_word("in") || self.at_word("out") {
                let incoming = self.at_word("in");
                self.next();
                let ports = if incoming {
                    &mut block.in_ports
                } else {
                    &mut block.out_ports
                };
                ports.insert(self.ident()?.0);
                while self.eat(&TokenKind::Comma) {
                    ports.insert(self.ident()?.0);
                }
                self.expect(TokenKind::Semi)?;
            } else if self.at_word("def") {
                let kw = self.next().loc;
                let (name, loc) = self.ident()?;
                let mut t = BlockTemplate::new(name.clone());
                t.loc = Loc(Some(kw));
                self.expect(TokenKind::LBrace)?;
                self.net_items(&mut t, templates)?;
                match templates.entry(name) {
                    Entry::Occupied(e) => self.duplicate("template", e.key(), loc),
                    Entry::Vacant(e) => {
                        e.insert(t);
                    }
                }
            } else if self.at_word("block") {
                let kw = self.next().loc;
                let (name, loc) = self.ident()?;
                let mut b = BlockTemplate::new(name.clone());
                b.loc = Loc(Some(kw));
                if !self.eat(&TokenKind::Semi) {
                    if !self.at(&TokenKind::LBrace) {
                        return self.unexpected("`{` or `;`");
                    }
                    self.next();
                    self.net_items(&mut b, templates)?;
                }
                if !names.insert(name.clone()) {
                    self.duplicate("block", &name, loc);
                }
                block.children.push(Child::Owned(b));
            } else if self.at_word("inst") {
                let kw = self.next().loc;
                let (template, _) = self.ident()?;
                let (name, loc) = self.ident()?;
                self.expect(TokenKind::Semi)?;
                if !names.insert(name.clone()) {
                    self.duplicate("block", &name, loc);
                }
                block.children.push(Child::Instance {
                    template,
                    name,
                    loc: Loc(Some(kw)),
                });
            } else if self.at_word("connect") {
                block.connectors.push(self.connect()?);
            } else {
                return self.unexpected("`in`, `out`, `def`, `block`, `inst`, `connect` or `}`");
            }
        }
    }

    fn connect(&mut self) -> PResult<ConnectorDecl> {
        let kw = self.expect_word("connect")?;
        let (source, _) = self.path()?;
        let stereotype = if self.eat(&TokenKind::Arrow) {
            None
        } else if self.eat(&TokenKind::StereoOpen) {
            let t = self.peek().clone();
            let st = match &t.kind {
                TokenKind::Word(w) => Stereotype::from_name(w),
                _ => None,
            };
            let Some(st) = st else {
                return self.unexpected("`M`, `E` or `H`");
            };
            self.next();
            self.expect(TokenKind::StereoClose)?;
            Some(st)
        } else {
            return self.unexpected("`->` or `-[`");
        };
        let mut targets = vec![self.path()?.0];
        while self.eat(&TokenKind::Comma) {
            targets.push(self.path()?.0);
        }
        let signal = if self.eat(&TokenKind::Colon) {
            Some(self.path()?.0)
        } else {
            None
        };
        self.expect(TokenKind::Semi)?;
        Ok(ConnectorDecl {
            source,
            targets,
            signal,
            stereotype,
            loc: Loc(Some(kw)),
        })
    }

    fn view(&mut self) -> PResult<(ViewDef, SourceLocation)> {
        let kw = self.expect_word("view")?;
        let (name, loc) = self.ident()?;
        self.expect_word("of")?;
        let kind = if self.eat_word("view") {
            BaseKind::View
        } else {
            BaseKind::Net
        };
        let (base, _) = self.ident()?;
        self.expect(TokenKind::LBrace)?;
        let items = self.view_items()?;
        Ok((
            ViewDef {
                name,
                base: ViewBase { name: base, kind },
                items,
                loc: Loc(Some(kw)),
            },
            loc,
        ))
    }

    fn view_items(&mut self) -> PResult<Vec<ViewItem>> {
        let mut items = Vec::new();
        loop {
            if self.eat(&TokenKind::RBrace) {
                return Ok(items);
            }
            if self.at_word("block") {
                let kw = self.next().loc;
                let (path, _) = self.path()?;
                let mut b = ViewBlock::new(path);
                b.loc = Loc(Some(kw));
                if !self.eat(&TokenKind::Semi) {
                    if !self.at(&TokenKind::LBrace) {
                        return self.unexpected("`{` or `;`");
                    }
                    self.next();
                    b.items = self.view_items()?;
                }
                items.push(ViewItem::Block(b));
            } else if self.at_word("env") {
                let kw = self.next().loc;
                let (name, _) = self.ident()?;
                self.expect(TokenKind::Semi)?;
                items.push(ViewItem::Env {
                    name,
                    loc: Loc(Some(kw)),
                });
            } else if self.at_word("ext") {
                let kw = self.next().loc;
                let (path, _) = self.path()?;
                self.expect(TokenKind::Semi)?;
                items.push(ViewItem::Ext {
                    path,
                    loc: Loc(Some(kw)),
                });
            } else if self.at_word("connect") {
                items.push(ViewItem::Connect(self.connect()?));
            } else {
                return self.unexpected("`block`, `env`, `ext`, `connect` or `}`");
            }
        }
    }

    fn features(&mut self) -> PResult<(FeatureDiagram, SourceLocation)> {
        let kw = self.expect_word("features")?;
        let (name, loc) = self.ident()?;
        self.expect(TokenKind::LBrace)?;
        let root_kw = self.expect_word("feature")?;
        let (root_name, _) = self.ident()?;
        let mut root = FeatureNode::leaf(root_name);
        root.loc = Loc(Some(root_kw));
        if self.at(&TokenKind::LBrace) {
            self.next();
            root.children = self.feature_body()?;
        } else {
            self.eat(&TokenKind::Semi);
        }
        self.expect(TokenKind::RBrace)?;
        Ok((
            FeatureDiagram {
                name,
                root,
                loc: Loc(Some(kw)),
            },
            loc,
        ))
    }

    /// `feature ID (featbody | ";")` with the keyword not yet consumed.
    fn feature(&mut self) -> PResult<FeatureNode> {
        let kw = self.expect_word("feature")?;
        let (name, _) = self.ident()?;
        let mut node = FeatureNode::leaf(name);
        node.loc = Loc(Some(kw));
        if !self.eat(&TokenKind::Semi) {
            if !self.at(&TokenKind::LBrace) {
                return self.unexpected("`{` or `;`");
            }
            self.next();
            node.children = self.feature_body()?;
        }
        Ok(node)
    }

    fn feature_body(&mut self) -> PResult<Vec<FeatureChild>> {
        let mut children = Vec::new();
        loop {
            if self.eat(&TokenKind::RBrace) {
                return Ok(children);
            }
            if self.at_word("mandatory") || self.at_word("optional") {
                let modality = if self.at_word("mandatory") {
                    Modality::Mandatory
                } else {
                    Modality::Optional
                };
                self.next();
                children.push(FeatureChild::Sub {
                    modality,
                    node: self.feature()?,
                });
            } else if self.at_word("alternative") || self.at_word("or") {
                let kind = if self.at_word("alternative") {
                    GroupKind::Alternative
                } else {
                    GroupKind::Or
                };
                let kw = self.next().loc;
                self.expect(TokenKind::LBrace)?;
                let mut members = vec![self.feature()?];
                while !self.eat(&TokenKind::RBrace) {
                    if !self.at_word("feature") {
                        return self.unexpected("`feature` or `}`");
                    }
                    members.push(self.feature()?);
                }
                children.push(FeatureChild::Group {
                    kind,
                    members,
                    loc: Loc(Some(kw)),
                });
            } else {
                return self.unexpected("`mandatory`, `optional`, `alternative`, `or` or `}`");
            }
        }
    }

    fn binding(&mut self) -> PResult<(Binding, SourceLocation)> {
        let kw = self.expect_word("binding")?;
        let (diagram, loc) = self.ident()?;
        self.expect(TokenKind::Arrow)?;
        let (net, _) = self.ident()?;
        self.expect(TokenKind::LBrace)?;
        let mut entries = BTreeMap::new();
        while !self.eat(&TokenKind::RBrace) {
            let (feature, floc) = self.ident()?;
            self.expect(TokenKind::Colon)?;
            self.expect_word("view")?;
            let (view, _) = self.ident()?;
            self.expect(TokenKind::Semi)?;
            match entries.entry(feature) {
                Entry::Occupied(e) => self.duplicate("binding entry", e.key(), floc),
                Entry::Vacant(e) => {
                    e.insert(view);
                }
            }
        }
        Ok((
            Binding {
                diagram,
                net,
                entries,
                loc: Loc(Some(kw)),
            },
            loc,
        ))
    }
}
