//! Naive forward chaining over the source rules: backtracking pattern matching over a
//! triple set, builtins evaluated once their inputs are bound, fixpoint iteration.
//! Shares no code with the compiler pipeline beyond the parsed rule structures.

use std::collections::{HashMap, HashSet};

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};

use super::exec::{compare, operate};
use super::fixture::{Fixture, Loader};
use super::value::{fmt_num, Payload, Store, Value};
use crate::error::{Error, ErrorCode, Result};
use crate::ir::{Cmp, Model, ModelType, Operator};
use crate::n3::{AnnotatedRule, Iri, Literal, Term, TermKind, Triple, RDF_TYPE};
use crate::ontology::{NodeContext, Ontology, TypeRef};

const MATH: &str = "http://www.w3.org/2000/10/swap/math#";
const LIST: &str = "http://www.w3.org/2000/10/swap/list#";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Node {
    Iri(String),
    Str(String),
    /// Canonical rendering of the number.
    Num(String),
    Blank(usize),
}

impl Node {
    fn num(&self) -> Option<f64> {
        match self {
            Node::Num(n) => n.parse().ok(),
            _ => None,
        }
    }

    fn from_literal(l: &Literal) -> Node {
        match l {
            Literal::String(s) => Node::Str(s.clone()),
            other => Node::Num(fmt_num(other.as_f64().unwrap_or(f64::NAN))),
        }
    }
}

pub type Fact = (Node, Node, Node);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub name: String,
    pub payload: Payload,
}

#[derive(Debug, Clone, Default)]
pub struct InferenceSet {
    /// Triples added by rule firings, in inference order.
    pub inferred: IndexSet<Fact>,
    pub events: Vec<EventRecord>,
    pub passes: usize,
}

/// Flattens the fixture's request and every remote result into triples.
pub fn fixture_triples(model: &Model, entry: &ModelType, fixture: &Fixture) -> Result<Vec<Fact>> {
    let mut store = Store::default();
    Loader::new(model, &mut store).load(&fixture.request, entry, "request")?;
    for (i, r) in fixture.remote.iter().enumerate() {
        let ty = model
            .adts
            .iter()
            .find(|a| a.name == r.resource_type || a.term.as_str() == r.resource_type || a.term.local_name() == r.resource_type)
            .map(|a| ModelType::Adt(a.term.clone()))
            .ok_or_else(|| Error::new(ErrorCode::FixtureType, format!("remote[{i}]: unknown type {}", r.resource_type)))?;
        for (j, res) in r.results.iter().enumerate() {
            Loader::new(model, &mut store).load(res, &ty, &format!("remote[{i}].results[{j}]"))?;
        }
    }
    let node = |v: &Value| match v {
        Value::Str(s) => Node::Str(s.clone()),
        Value::Num(n) => Node::Num(fmt_num(*n)),
        Value::Iri(i) => Node::Iri(i.as_str().to_string()),
        Value::Entity(e) => Node::Iri(store.get(*e).id.clone()),
    };
    let mut out = IndexSet::new();
    for e in &store.entities {
        let me = Node::Iri(e.id.clone());
        out.insert((me.clone(), Node::Iri(RDF_TYPE.into()), Node::Iri(e.class.as_str().into())));
        let adt = model.adt(&e.class);
        for (p, vs) in &e.fields {
            let inverse = model
                .adts
                .iter()
                .chain(adt)
                .flat_map(|a| a.fields.iter())
                .find(|f| &f.term == p)
                .and_then(|f| f.inverse_of.clone());
            for v in vs {
                match &inverse {
                    Some(orig) => out.insert((node(v), Node::Iri(orig.as_str().into()), me.clone())),
                    None => out.insert((me.clone(), Node::Iri(p.as_str().into()), node(v))),
                };
            }
        }
    }
    Ok(out.into_iter().collect())
}

#[derive(Debug, Clone)]
enum P {
    Var(String),
    Const(Node),
    List(Vec<P>),
}

#[derive(Debug, Clone)]
enum Pattern {
    Data(P, Node, P),
    Compare(P, Cmp, P),
    Op(Operator, Vec<P>, String),
}

struct Prepared {
    body: Vec<Pattern>,
    head: Vec<Triple>,
    event: Option<String>,
    vars: Vec<String>,
}

fn builtin_cmp(p: &str) -> Option<Cmp> {
    match p.strip_prefix(MATH) {
        Some("greaterThan") => Some(Cmp::Gt),
        Some("lessThan") => Some(Cmp::Lt),
        Some("notLessThan") => Some(Cmp::Ge),
        Some("notGreaterThan") => Some(Cmp::Le),
        Some("equalTo") => Some(Cmp::Equal),
        _ => (p == format!("{LIST}in")).then_some(Cmp::In),
    }
}

fn builtin_op(p: &str) -> Option<Operator> {
    match p.strip_prefix(MATH)? {
        "sum" => Some(Operator::Sum),
        "product" => Some(Operator::Product),
        "quotient" => Some(Operator::Quotient),
        "exponentiation" => Some(Operator::Exponent),
        _ => None,
    }
}

fn outside(t: &Term, what: &str) -> Error {
    Error::at(ErrorCode::OutsideFragment, t.pos, format!("{what}: {t}"))
}

fn pterm(t: &Term) -> Result<P> {
    Ok(match &t.kind {
        TermKind::Variable(v) => P::Var(v.clone()),
        TermKind::BlankNode(b) => P::Var(format!("_:b{b}")),
        TermKind::Iri(i) => P::Const(Node::Iri(i.as_str().into())),
        TermKind::Literal(l) => P::Const(Node::from_literal(l)),
        TermKind::List(items) => P::List(items.iter().map(pterm).collect::<Result<_>>()?),
        TermKind::Graph(_) => return Err(outside(t, "nested graph")),
    })
}

fn prepare(rule: &AnnotatedRule, ont: &Ontology) -> Result<Prepared> {
    let mut body = Vec::new();
    let mut fresh = 0;
    for (t, _) in rule.all_body_triples() {
        let pred = t.predicate.as_iri().ok_or_else(|| outside(&t.predicate, "variable predicate"))?;
        let (s, o) = (pterm(&t.subject)?, pterm(&t.object)?);
        if let Some(op) = builtin_op(pred.as_str()) {
            let (P::List(args), P::Var(r)) = (s, o) else { return Err(outside(&t.subject, "operation form")) };
            body.push(Pattern::Op(op, args, r));
        } else if let Some(c) = builtin_cmp(pred.as_str()) {
            body.push(Pattern::Compare(s, c, o));
        } else {
            if matches!(s, P::Const(Node::Str(_) | Node::Num(_))) {
                return Err(outside(&t.subject, "literal subject"));
            }
            let p = Node::Iri(pred.as_str().into());
            // a literal standing for an entity identified by its key property
            let key = match (&t.object.kind, ont.property(pred).range) {
                (TermKind::Literal(_), Some(r)) if ont.is_class(&r) => ont.key_property(&r).cloned(),
                _ => None,
            };
            match key {
                Some(k) => {
                    fresh += 1;
                    let v = format!("_:key{fresh}");
                    body.push(Pattern::Data(s, p, P::Var(v.clone())));
                    body.push(Pattern::Data(P::Var(v), Node::Iri(k.as_str().into()), o));
                }
                None => body.push(Pattern::Data(s, p, o)),
            }
        }
    }
    let mut vars = Vec::new();
    for pat in &body {
        let mut add = |p: &P| collect_vars(p, &mut vars);
        match pat {
            Pattern::Data(s, _, o) | Pattern::Compare(s, _, o) => {
                add(s);
                add(o);
            }
            Pattern::Op(_, args, r) => {
                args.iter().for_each(&mut add);
                add(&P::Var(r.clone()));
            }
        }
    }
    Ok(Prepared { body, head: rule.head.clone(), event: rule.event_name.clone(), vars })
}

fn collect_vars(p: &P, out: &mut Vec<String>) {
    match p {
        P::Var(v) if !out.contains(v) => out.push(v.clone()),
        P::List(items) => items.iter().for_each(|i| collect_vars(i, out)),
        _ => {}
    }
}

type Binding = HashMap<String, Node>;

fn resolve(p: &P, b: &Binding) -> Option<Vec<Node>> {
    match p {
        P::Var(v) => b.get(v).map(|n| vec![n.clone()]),
        P::Const(n) => Some(vec![n.clone()]),
        P::List(items) => {
            let mut out = Vec::new();
            for i in items {
                out.extend(resolve(i, b)?);
            }
            Some(out)
        }
    }
}

fn unify(p: &P, n: &Node, b: &mut Binding) -> bool {
    match p {
        P::Var(v) => match b.get(v) {
            Some(x) => x == n,
            None => {
                b.insert(v.clone(), n.clone());
                true
            }
        },
        P::Const(c) => c == n,
        P::List(_) => false,
    }
}

fn ready(pat: &Pattern, b: &Binding) -> bool {
    match pat {
        Pattern::Data(..) => false,
        Pattern::Compare(s, _, o) => resolve(s, b).is_some() && resolve(o, b).is_some(),
        Pattern::Op(_, args, _) => args.iter().all(|a| resolve(a, b).is_some()),
    }
}

fn solve(pats: &[Pattern], pending: &mut Vec<usize>, b: &mut Binding, facts: &IndexSet<Fact>, out: &mut Vec<Binding>) {
    if pending.is_empty() {
        out.push(b.clone());
        return;
    }
    let pick = pending.iter().position(|&i| ready(&pats[i], b)).or_else(|| {
        pending.iter().position(|&i| matches!(pats[i], Pattern::Data(..)))
    });
    // builtins whose inputs can never be bound
    let Some(k) = pick else { return };
    let i = pending.remove(k);
    match &pats[i] {
        Pattern::Data(s, p, o) => {
            for (fs, fp, fo) in facts {
                if fp != p {
                    continue;
                }
                let mut nb = b.clone();
                if unify(s, fs, &mut nb) && unify(o, fo, &mut nb) {
                    solve(pats, pending, &mut nb, facts, out);
                }
            }
        }
        Pattern::Compare(s, cmp, o) => {
            let l = resolve(s, b).unwrap();
            let r = resolve(o, b).unwrap();
            let holds = match (cmp, l.as_slice()) {
                (Cmp::In, [x]) => r.contains(x),
                (_, [x]) if r.len() == 1 => match (x.num(), r[0].num()) {
                    (Some(a), Some(c)) => compare(*cmp, a, c),
                    _ => *cmp == Cmp::Equal && *x == r[0],
                },
                _ => false,
            };
            if holds {
                solve(pats, pending, b, facts, out);
            }
        }
        Pattern::Op(op, args, r) => {
            let mut xs = Vec::new();
            for a in args {
                match resolve(a, b).unwrap().as_slice() {
                    [n] => match n.num() {
                        Some(x) => xs.push(x),
                        None => {
                            pending.insert(k, i);
                            return;
                        }
                    },
                    _ => {
                        pending.insert(k, i);
                        return;
                    }
                }
            }
            if let Some(v) = operate(*op, &xs) {
                let mut nb = b.clone();
                if unify(&P::Var(r.clone()), &Node::Num(fmt_num(v)), &mut nb) {
                    solve(pats, pending, &mut nb, facts, out);
                }
            }
        }
    }
    pending.insert(k, i);
}

/// Forward chaining to fixpoint. Each distinct firing binding fires once and mints fresh
/// blank nodes for the head's blank nodes.
pub fn naive_rule_eval(rules: &[AnnotatedRule], ont: &Ontology, dataset: &[Fact]) -> Result<InferenceSet> {
    let prepared: Vec<Prepared> = rules.iter().map(|r| prepare(r, ont)).collect::<Result<_>>()?;
    for (s, _, _) in dataset {
        if matches!(s, Node::Str(_) | Node::Num(_)) {
            return Err(Error::new(ErrorCode::OutsideFragment, format!("literal subject {s:?} in dataset")));
        }
    }
    let mut facts: IndexSet<Fact> = dataset.iter().cloned().collect();
    let mut result = InferenceSet::default();
    let mut fired: HashSet<(usize, Vec<Option<Node>>)> = HashSet::new();
    let mut blanks = 0;
    loop {
        result.passes += 1;
        let mut changed = false;
        for (ri, rule) in prepared.iter().enumerate() {
            let mut sols = Vec::new();
            let mut pending: Vec<usize> = (0..rule.body.len()).collect();
            solve(&rule.body, &mut pending, &mut Binding::new(), &facts, &mut sols);
            for b in sols {
                let key: Vec<Option<Node>> = rule.vars.iter().map(|v| b.get(v).cloned()).collect();
                if !fired.insert((ri, key)) {
                    continue;
                }
                let mut minted: HashMap<u32, Node> = HashMap::new();
                let mut head_facts = Vec::new();
                for t in &rule.head {
                    let mut node = |term: &Term| -> Result<Node> {
                        Ok(match &term.kind {
                            TermKind::BlankNode(id) => minted
                                .entry(*id)
                                .or_insert_with(|| {
                                    blanks += 1;
                                    Node::Blank(blanks)
                                })
                                .clone(),
                            TermKind::Variable(v) => {
                                b.get(v).cloned().ok_or_else(|| outside(term, "head variable not bound by the body"))?
                            }
                            TermKind::Iri(i) => Node::Iri(i.as_str().into()),
                            TermKind::Literal(l) => Node::from_literal(l),
                            _ => return Err(outside(term, "head term")),
                        })
                    };
                    let s = node(&t.subject)?;
                    let p = node(&t.predicate)?;
                    let o = node(&t.object)?;
                    head_facts.push((s, p, o));
                }
                for f in &head_facts {
                    if facts.insert(f.clone()) {
                        result.inferred.insert(f.clone());
                        changed = true;
                    }
                }
                if let Some(name) = &rule.event {
                    let root = head_root(&rule.head, &minted);
                    if let Some(root) = root {
                        let payload = payload(&root, &head_facts, &rule.head, &minted, ont);
                        result.events.push(EventRecord { name: name.clone(), payload });
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(result)
}

/// The head's blank node that no other head triple points to.
fn head_root(head: &[Triple], minted: &HashMap<u32, Node>) -> Option<Node> {
    let targets: HashSet<u32> = head
        .iter()
        .filter_map(|t| match t.object.kind {
            TermKind::BlankNode(b) => Some(b),
            _ => None,
        })
        .collect();
    head.iter().find_map(|t| match t.subject.kind {
        TermKind::BlankNode(b) if !targets.contains(&b) => minted.get(&b).cloned(),
        _ => None,
    })
}

fn payload(n: &Node, facts: &[Fact], head: &[Triple], minted: &HashMap<u32, Node>, ont: &Ontology) -> Payload {
    match n {
        Node::Str(s) => Payload::Str(s.clone()),
        Node::Num(x) => Payload::Num(x.parse().unwrap_or(f64::NAN)),
        Node::Iri(i) => Payload::Ref { id: i.clone() },
        Node::Blank(_) => {
            let mut fields: IndexMap<Iri, Vec<Payload>> = IndexMap::new();
            let mut explicit = None;
            for (s, p, o) in facts {
                if s != n {
                    continue;
                }
                let Node::Iri(p) = p else { continue };
                if p == RDF_TYPE {
                    if let Node::Iri(c) = o {
                        explicit = Some(Iri::new(c.clone()));
                    }
                    continue;
                }
                fields.entry(Iri::new(p.clone())).or_default().push(payload(o, facts, head, minted, ont));
            }
            let class = explicit.or_else(|| infer_class(n, head, minted, ont));
            Payload::Node { class, fields }
        }
    }
}

fn infer_class(n: &Node, head: &[Triple], minted: &HashMap<u32, Node>, ont: &Ontology) -> Option<Iri> {
    let id = minted.iter().find(|(_, v)| *v == n).map(|(k, _)| *k)?;
    let is_me = |t: &Term| matches!(t.kind, TermKind::BlankNode(b) if b == id);
    let ctx = NodeContext {
        explicit_types: Vec::new(),
        incoming: head.iter().filter(|t| is_me(&t.object)).filter_map(|t| t.predicate.as_iri()).collect(),
        outgoing: head.iter().filter(|t| is_me(&t.subject)).filter_map(|t| t.predicate.as_iri()).collect(),
        literal: None,
    };
    match ont.type_of_node(&ctx) {
        Ok(TypeRef::Class(c)) => Some(c),
        _ => None,
    }
}
