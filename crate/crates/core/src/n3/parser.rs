use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorCode, Result};
use crate::n3::lexer::{tokenize, Tok, Token};
use crate::n3::term::*;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParsedDocument {
    pub prefixes: IndexMap<String, String>,
    pub rules: Vec<AnnotatedRule>,
    pub ground_triples: Vec<Triple>,
}

pub fn parse_document(text: &str) -> Result<ParsedDocument> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, i: 0, prefixes: IndexMap::new(), next_blank: 0 };
    let mut doc = ParsedDocument::default();
    loop {
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::PrefixKw => p.prefix_decl()?,
            Tok::LBrace => doc.rules.push(p.rule()?),
            _ => p.ground_statement(&mut doc.ground_triples)?,
        }
    }
    doc.prefixes = p.prefixes;
    Ok(doc)
}

/// Validates annotations and returns the rules in source order.
pub fn extract_rules(doc: &ParsedDocument) -> Result<Vec<AnnotatedRule>> {
    for rule in &doc.rules {
        if let Some((pred, _)) = rule.extra_annotations.first() {
            let name = pred.to_string();
            return Err(match pred.as_iri() {
                Some(i) if i.as_str().starts_with(CG_NS) => Error::at(
                    ErrorCode::UnknownAnnotation,
                    pred.pos,
                    format!("unknown annotation cg:{}", i.local_name()),
                ),
                _ => Error::at(
                    ErrorCode::UnknownAnnotation,
                    pred.pos,
                    format!("predicate {name} is not an annotation and cannot be attached to a rule"),
                ),
            });
        }
        for req in &rule.requests {
            if req.location.as_iri().is_none() {
                return Err(Error::at(
                    ErrorCode::RequestLocation,
                    req.location.pos,
                    format!("cg:request expects an IRI, found {}", req.location),
                ));
            }
        }
    }
    Ok(doc.rules.clone())
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    prefixes: IndexMap<String, String>,
    next_blank: u32,
}

fn cg(local: &str) -> String {
    format!("{CG_NS}{local}")
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.i += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> Error {
        let tok = self.peek();
        let code = match tok {
            Tok::Eof => ErrorCode::Unbalanced,
            Tok::RBrace | Tok::RBracket | Tok::RParen => ErrorCode::Unbalanced,
            _ => ErrorCode::Syntax,
        };
        Error::at(code, self.pos(), format!("expected {wanted}, found {}", tok.describe()))
    }

    fn expect(&mut self, tok: Tok) -> Result<Token> {
        if *self.peek() == tok {
            Ok(self.advance())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn prefix_decl(&mut self) -> Result<()> {
        self.advance();
        let pos = self.pos();
        let name = match self.advance().tok {
            Tok::PName { prefix, local } if local.is_empty() => prefix,
            other => {
                return Err(Error::at(ErrorCode::Syntax, pos, format!("expected prefix name, found {}", other.describe())))
            }
        };
        let pos = self.pos();
        let iri = match self.advance().tok {
            Tok::IriRef(i) => i,
            other => return Err(Error::at(ErrorCode::Syntax, pos, format!("expected IRI, found {}", other.describe()))),
        };
        self.expect(Tok::Dot)?;
        self.prefixes.insert(name, iri);
        Ok(())
    }

    fn resolve(&self, prefix: &str, local: &str, pos: Pos) -> Result<Iri> {
        match self.prefixes.get(prefix) {
            Some(base) => Ok(Iri(format!("{base}{local}"))),
            None => Err(Error::at(ErrorCode::UnresolvedPrefix, pos, format!("undeclared prefix '{prefix}:'"))),
        }
    }

    fn ground_statement(&mut self, out: &mut Vec<Triple>) -> Result<()> {
        let start = out.len();
        let bracketed = matches!(self.peek(), Tok::LBracket);
        let subject = self.term(out)?;
        if !(bracketed && *self.peek() == Tok::Dot) {
            self.predicate_object_list(&subject, out)?;
        }
        self.expect(Tok::Dot)?;
        for t in &out[start..] {
            if let Some(i) = t.predicate_iri() {
                if i.as_str().starts_with(CG_NS) {
                    return Err(Error::at(
                        ErrorCode::AnnotationOnNonRule,
                        t.predicate.pos,
                        format!("annotation cg:{} is only allowed on rules", i.local_name()),
                    ));
                }
            }
        }
        Ok(())
    }

    fn rule(&mut self) -> Result<AnnotatedRule> {
        let pos = self.pos();
        self.advance();
        let (body, requests) = self.formula()?;
        if *self.peek() != Tok::Implies {
            if matches!(self.peek(), Tok::Semi | Tok::PName { .. } | Tok::IriRef(_)) {
                return Err(Error::at(
                    ErrorCode::AnnotationOnNonRule,
                    self.pos(),
                    "predicates on a top-level graph term are only allowed after a rule",
                ));
            }
            return Err(self.unexpected("'=>'"));
        }
        self.advance();
        let head_pos = self.pos();
        self.expect(Tok::LBrace)?;
        let (head, head_requests) = self.formula()?;
        if !head_requests.is_empty() {
            return Err(Error::at(ErrorCode::RequestInHead, head_pos, "cg:request blocks are not allowed in rule heads"));
        }
        let mut rule = AnnotatedRule {
            body,
            head,
            function_params: Vec::new(),
            event_name: None,
            requests,
            extra_annotations: Vec::new(),
            pos,
        };
        if *self.peek() == Tok::Semi {
            self.advance();
            let mut scratch = Vec::new();
            while self.starts_predicate() {
                let pred = self.predicate()?;
                loop {
                    let obj = self.term(&mut scratch)?;
                    self.annotate(&mut rule, &pred, obj)?;
                    if *self.peek() != Tok::Comma {
                        break;
                    }
                    self.advance();
                }
                if *self.peek() != Tok::Semi {
                    break;
                }
                self.advance();
            }
            if !scratch.is_empty() {
                return Err(Error::at(ErrorCode::UnsupportedSyntax, scratch[0].pos, "blank node property lists are not allowed in annotations"));
            }
        }
        self.expect(Tok::Dot)?;
        Ok(rule)
    }

    fn annotate(&mut self, rule: &mut AnnotatedRule, pred: &Term, obj: Term) -> Result<()> {
        let name = pred.as_iri().map(|i| i.as_str().to_string()).unwrap_or_default();
        if name == cg("functionParam") {
            match &obj.kind {
                TermKind::Variable(v) => rule.function_params.push(v.clone()),
                _ => return Err(Error::at(ErrorCode::Syntax, obj.pos, "cg:functionParam expects a variable")),
            }
        } else if name == cg("event") {
            match &obj.kind {
                TermKind::Literal(Literal::String(s)) => rule.event_name = Some(s.clone()),
                _ => return Err(Error::at(ErrorCode::Syntax, obj.pos, "cg:event expects a string literal")),
            }
        } else {
            rule.extra_annotations.push((pred.clone(), obj));
        }
        Ok(())
    }

    /// Parses triples up to the closing `}` (the opening brace is already consumed).
    fn formula(&mut self) -> Result<(Vec<Triple>, Vec<RequestAnnotation>)> {
        let mut triples = Vec::new();
        let mut requests = Vec::new();
        loop {
            if *self.peek() == Tok::RBrace {
                self.advance();
                return Ok((triples, requests));
            }
            if *self.peek() == Tok::LBrace {
                self.request_block(&mut requests)?;
            } else {
                let bracketed = matches!(self.peek(), Tok::LBracket);
                let subject = self.term(&mut triples)?;
                if !(bracketed && matches!(self.peek(), Tok::Dot | Tok::RBrace)) {
                    self.predicate_object_list(&subject, &mut triples)?;
                }
            }
            match self.peek() {
                Tok::Dot => {
                    self.advance();
                }
                Tok::RBrace => {}
                _ => return Err(self.unexpected("'.' or '}'")),
            }
        }
    }

    fn request_block(&mut self, requests: &mut Vec<RequestAnnotation>) -> Result<()> {
        let pos = self.pos();
        self.advance();
        let (graph, nested) = self.formula()?;
        if !nested.is_empty() {
            return Err(Error::at(ErrorCode::UnsupportedSyntax, pos, "nested request blocks are not supported"));
        }
        if *self.peek() == Tok::Implies {
            return Err(Error::at(ErrorCode::UnsupportedSyntax, self.pos(), "nested rules are not supported"));
        }
        if *self.peek() == Tok::Semi {
            self.advance();
        }
        loop {
            let pred = self.predicate()?;
            if pred.as_iri().map(|i| i.as_str()) != Some(cg("request").as_str()) {
                return Err(Error::at(
                    ErrorCode::UnsupportedSyntax,
                    pred.pos,
                    format!("graph terms inside a rule only support cg:request, found {pred}"),
                ));
            }
            let mut scratch = Vec::new();
            let location = self.term(&mut scratch)?;
            requests.push(RequestAnnotation { graph: graph.clone(), location, pos });
            if *self.peek() == Tok::Semi && self.starts_predicate_at(1) {
                self.advance();
                continue;
            }
            return Ok(());
        }
    }

    fn starts_predicate(&self) -> bool {
        self.starts_predicate_at(0)
    }

    fn starts_predicate_at(&self, k: usize) -> bool {
        matches!(
            self.toks.get(self.i + k).map(|t| &t.tok),
            Some(Tok::A | Tok::IriRef(_) | Tok::PName { .. } | Tok::Var(_))
        )
    }

    fn predicate_object_list(&mut self, subject: &Term, out: &mut Vec<Triple>) -> Result<()> {
        loop {
            let pred = self.predicate()?;
            loop {
                let pos = pred.pos;
                let slot = out.len();
                out.push(Triple { subject: subject.clone(), predicate: pred.clone(), object: subject.clone(), pos });
                let obj = self.term(out)?;
                out[slot].object = obj;
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.advance();
            }
            if *self.peek() != Tok::Semi {
                return Ok(());
            }
            self.advance();
            if !self.starts_predicate() {
                return Ok(());
            }
        }
    }

    fn predicate(&mut self) -> Result<Term> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::A => TermKind::Iri(Iri::new(RDF_TYPE)),
            Tok::IriRef(i) => TermKind::Iri(Iri(i)),
            Tok::PName { prefix, local } => TermKind::Iri(self.resolve(&prefix, &local, pos)?),
            Tok::Var(v) => TermKind::Variable(v),
            _ => return Err(self.unexpected("a predicate")),
        };
        self.advance();
        Ok(Term::new(kind, pos))
    }

    fn term(&mut self, out: &mut Vec<Triple>) -> Result<Term> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::IriRef(i) => TermKind::Iri(Iri(i)),
            Tok::PName { prefix, local } => TermKind::Iri(self.resolve(&prefix, &local, pos)?),
            Tok::Var(v) => TermKind::Variable(v),
            Tok::Str(s) => TermKind::Literal(Literal::String(s)),
            Tok::Int(n) => TermKind::Literal(Literal::Integer(n)),
            Tok::Dec(d) => TermKind::Literal(Literal::Decimal(d)),
            Tok::LBracket => {
                self.advance();
                let id = self.next_blank;
                self.next_blank += 1;
                let node = Term::new(TermKind::BlankNode(id), pos);
                if *self.peek() != Tok::RBracket {
                    self.predicate_object_list(&node, out)?;
                }
                self.expect(Tok::RBracket)?;
                return Ok(node);
            }
            Tok::LParen => {
                self.advance();
                let mut items = Vec::new();
                while *self.peek() != Tok::RParen {
                    if *self.peek() == Tok::Eof {
                        return Err(Error::at(ErrorCode::Unbalanced, pos, "unclosed '('"));
                    }
                    items.push(self.term(out)?);
                }
                self.advance();
                return Ok(Term::new(TermKind::List(items), pos));
            }
            Tok::LBrace => {
                return Err(Error::at(
                    ErrorCode::UnsupportedSyntax,
                    pos,
                    "graph terms are only supported as rule body/head or cg:request blocks",
                ))
            }
            _ => return Err(self.unexpected("a term")),
        };
        self.advance();
        Ok(Term::new(kind, pos))
    }
}
