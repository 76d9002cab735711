use std::fmt;

use serde::{Deserialize, Serialize};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const LOG_IMPLIES: &str = "http://www.w3.org/2000/10/swap/log#implies";
pub const MATH_NS: &str = "http://www.w3.org/2000/10/swap/math#";
pub const LIST_NS: &str = "http://www.w3.org/2000/10/swap/list#";
pub const XSD_NS: &str = "http://www.w3.org/2001/XMLSchema#";
pub const OWL_NS: &str = "http://www.w3.org/2002/07/owl#";
pub const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
/// Namespace of the code-generation annotations (`cg:functionParam`, `cg:event`, `cg:request`).
pub const CG_NS: &str = "https://w3id.org/kgsc/cg#";

/// 1-based source position.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Iri(pub String);

impl Iri {
    pub fn new(s: impl Into<String>) -> Self {
        Iri(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Part after the last `#` or `/` (or the whole IRI if neither yields a nonempty tail).
    pub fn local_name(&self) -> &str {
        let s = self.0.trim_end_matches('/');
        match s.rfind(['#', '/', ':']) {
            Some(i) if i + 1 < s.len() => &s[i + 1..],
            _ => s,
        }
    }

    /// Everything up to and including the last `#` or `/`.
    pub fn namespace(&self) -> &str {
        let local = self.local_name();
        let s = self.0.trim_end_matches('/');
        &s[..s.len() - local.len()]
    }

    pub fn is(&self, other: &str) -> bool {
        self.0 == other
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    String(String),
    Integer(i64),
    /// Decimal literal; the lexical form is kept so printing round-trips exactly.
    Decimal(String),
}

impl Literal {
    pub fn datatype(&self) -> Iri {
        let local = match self {
            Literal::String(_) => "string",
            Literal::Integer(_) => "integer",
            Literal::Decimal(_) => "decimal",
        };
        Iri(format!("{XSD_NS}{local}"))
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Integer(i) => Some(*i as f64),
            Literal::Decimal(d) => d.parse().ok(),
            Literal::String(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Term {
    pub kind: TermKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TermKind {
    Iri(Iri),
    Literal(Literal),
    /// Document-unique id assigned in source order.
    BlankNode(u32),
    Variable(String),
    List(Vec<Term>),
    Graph(Vec<Triple>),
}

// Positions are diagnostics only; structural equality ignores them.
impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl Term {
    pub fn new(kind: TermKind, pos: Pos) -> Self {
        Term { kind, pos }
    }

    pub fn iri(s: &str) -> Self {
        Term::new(TermKind::Iri(Iri::new(s)), Pos::default())
    }

    pub fn var(name: &str) -> Self {
        Term::new(TermKind::Variable(name.to_string()), Pos::default())
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match &self.kind {
            TermKind::Iri(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match &self.kind {
            TermKind::Variable(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self.kind, TermKind::Variable(_))
    }

    pub fn is_blank(&self) -> bool {
        matches!(self.kind, TermKind::BlankNode(_))
    }

    /// IRIs and literals; lists of concrete terms are concrete too.
    pub fn is_concrete(&self) -> bool {
        match &self.kind {
            TermKind::Iri(_) | TermKind::Literal(_) => true,
            TermKind::List(items) => items.iter().all(Term::is_concrete),
            _ => false,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TermKind::Iri(i) => write!(f, "{i}"),
            TermKind::Literal(Literal::String(s)) => write!(f, "\"{}\"", escape(s)),
            TermKind::Literal(Literal::Integer(i)) => write!(f, "{i}"),
            TermKind::Literal(Literal::Decimal(d)) => write!(f, "{d}"),
            TermKind::BlankNode(id) => write!(f, "_:b{id}"),
            TermKind::Variable(v) => write!(f, "?{v}"),
            TermKind::List(items) => {
                write!(f, "(")?;
                for (i, t) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            TermKind::Graph(triples) => {
                write!(f, "{{ ")?;
                for t in triples {
                    write!(f, "{} {} {} . ", t.subject, t.predicate, t.object)?;
                }
                write!(f, "}}")
            }
        }
    }
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
    pub pos: Pos,
}

impl PartialEq for Triple {
    fn eq(&self, other: &Self) -> bool {
        self.subject == other.subject
            && self.predicate == other.predicate
            && self.object == other.object
    }
}

impl Triple {
    pub fn predicate_iri(&self) -> Option<&Iri> {
        self.predicate.as_iri()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestAnnotation {
    pub graph: Vec<Triple>,
    pub location: Term,
    pub pos: Pos,
}

/// A `{ body } => { head }` statement with its code-generation annotations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatedRule {
    /// Body triples outside request blocks.
    pub body: Vec<Triple>,
    pub head: Vec<Triple>,
    pub function_params: Vec<String>,
    pub event_name: Option<String>,
    /// Nested graph terms annotated with `cg:request`, in source order.
    pub requests: Vec<RequestAnnotation>,
    /// Predicate/object pairs on the rule statement that are not recognised annotations.
    /// `extract_rules` rejects rules carrying any.
    pub extra_annotations: Vec<(Term, Term)>,
    pub pos: Pos,
}

impl PartialEq for AnnotatedRule {
    fn eq(&self, other: &Self) -> bool {
        self.body == other.body
            && self.head == other.head
            && self.function_params == other.function_params
            && self.event_name == other.event_name
            && self.requests == other.requests
            && self.extra_annotations == other.extra_annotations
    }
}

impl AnnotatedRule {
    /// Body triples followed by each request block's triples, tagged with the request location.
    pub fn all_body_triples(&self) -> impl Iterator<Item = (&Triple, Option<&Term>)> {
        self.body.iter().map(|t| (t, None)).chain(
            self.requests
                .iter()
                .flat_map(|r| r.graph.iter().map(move |t| (t, Some(&r.location)))),
        )
    }
}
