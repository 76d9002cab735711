//! Rule graphs rooted at the function parameter, with inverted edges where needed.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use crate::error::{Error, ErrorCode, Result};
use crate::ir::{Cmp, Operator};
use crate::n3::*;
use crate::ontology::{NodeContext, Ontology, TypeRef};

pub type NodeId = usize;
pub type EdgeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Clause {
    Body,
    Head,
}

#[derive(Debug, Clone)]
pub struct GraphNode {
    pub term: Term,
    pub resolved: Option<TypeRef>,
    pub outgoing: Vec<EdgeId>,
    pub incoming: Option<EdgeId>,
}

#[derive(Debug, Clone)]
pub struct GraphEdge {
    pub source: NodeId,
    pub target: NodeId,
    /// Property IRI, comparator builtin, or rdf:type.
    pub property: Iri,
    pub clause: Clause,
    pub request: Option<Iri>,
    pub comparator: Option<Cmp>,
    /// Source property when the edge was inverted.
    pub original: Option<Iri>,
    pub synthetic_inverse: bool,
    /// The target variable is bound elsewhere; the edge compares against that binding.
    pub join: bool,
    pub pos: Pos,
}

impl GraphEdge {
    pub fn is_type(&self) -> bool {
        self.property.as_str() == RDF_TYPE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperationEdge {
    pub operands: Vec<Term>,
    pub operator: Operator,
    pub operator_iri: Iri,
    pub result: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OperationEdgeSet {
    pub edges: Vec<OperationEdge>,
}

/// A comparator applied to the result of an operation.
#[derive(Debug, Clone, PartialEq)]
pub struct OpComparison {
    pub variable: String,
    pub cmp: Cmp,
    pub right: Term,
    pub pos: Pos,
}

#[derive(Debug, Clone)]
pub struct RuleGraph {
    pub rule: AnnotatedRule,
    pub root: NodeId,
    /// Blank nodes heading existential head structures.
    pub head_roots: Vec<NodeId>,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    pub operations: OperationEdgeSet,
    pub op_comparisons: Vec<OpComparison>,
}

pub fn comparator(iri: &Iri) -> Option<Cmp> {
    let s = iri.as_str();
    if let Some(local) = s.strip_prefix(MATH_NS) {
        return match local {
            "notLessThan" => Some(Cmp::Ge),
            "lessThan" => Some(Cmp::Lt),
            "greaterThan" => Some(Cmp::Gt),
            "notGreaterThan" => Some(Cmp::Le),
            "equalTo" => Some(Cmp::Equal),
            _ => None,
        };
    }
    (s == format!("{LIST_NS}in")).then_some(Cmp::In)
}

pub fn operator(iri: &Iri) -> Option<Operator> {
    match iri.as_str().strip_prefix(MATH_NS)? {
        "sum" => Some(Operator::Sum),
        "product" => Some(Operator::Product),
        "quotient" => Some(Operator::Quotient),
        "exponentiation" => Some(Operator::Exponent),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Var(String),
    Blank(u32),
}

fn key(t: &Term) -> Option<Key> {
    match &t.kind {
        TermKind::Variable(v) => Some(Key::Var(v.clone())),
        TermKind::BlankNode(b) => Some(Key::Blank(*b)),
        _ => None,
    }
}

struct Data {
    triple: Triple,
    request: Option<Iri>,
    cmp: Option<Cmp>,
}

pub fn build_rule_graph(rule: &AnnotatedRule, ont: &Ontology) -> Result<(RuleGraph, OperationEdgeSet)> {
    let param = match rule.function_params.as_slice() {
        [] => {
            return Err(Error::at(ErrorCode::NoFunctionParam, rule.pos, "rule has no cg:functionParam annotation"))
        }
        [p] => p.clone(),
        _ => {
            return Err(Error::at(
                ErrorCode::MultipleFunctionParams,
                rule.pos,
                "only single-parameter rules are supported",
            ))
        }
    };

    let mut body: Vec<(&Triple, Option<&Term>)> = rule.all_body_triples().collect();
    body.sort_by_key(|(t, _)| (t.pos.line, t.pos.col));
    for (t, _) in body.iter().chain(rule.head.iter().map(|t| (t, None)).collect::<Vec<_>>().iter()) {
        if t.predicate.as_iri().is_none() {
            return Err(Error::at(
                ErrorCode::VariablePredicate,
                t.predicate.pos,
                format!("predicate {} is not concrete; all predicates must be IRIs", t.predicate),
            ));
        }
    }

    let mut operations = OperationEdgeSet::default();
    let mut data: Vec<Data> = Vec::new();
    for (t, loc) in &body {
        let request = match loc {
            Some(l) => Some(l.as_iri().cloned().ok_or_else(|| {
                Error::at(ErrorCode::RequestLocation, l.pos, "cg:request expects an IRI")
            })?),
            None => None,
        };
        let pred = t.predicate_iri().unwrap();
        if let TermKind::List(items) = &t.subject.kind {
            let op = operator(pred).ok_or_else(|| {
                Error::at(ErrorCode::UnsupportedOperator, t.predicate.pos, format!("unsupported operator {pred}"))
            })?;
            let result = t.object.as_var().ok_or_else(|| {
                Error::at(ErrorCode::UnsupportedOperator, t.object.pos, "operation result must be a variable")
            })?;
            operations.edges.push(OperationEdge {
                operands: items.clone(),
                operator: op,
                operator_iri: pred.clone(),
                result: result.to_string(),
                pos: t.pos,
            });
            continue;
        }
        if operator(pred).is_some() {
            return Err(Error::at(ErrorCode::UnsupportedOperator, t.pos, "operations need a list of operands as subject"));
        }
        if key(&t.subject).is_none() {
            return Err(Error::at(
                ErrorCode::Disconnected,
                t.subject.pos,
                format!("subject {} must be a variable or blank node", t.subject),
            ));
        }
        data.push(Data { triple: (*t).clone(), request, cmp: comparator(pred) });
    }

    let op_results: HashSet<&str> = operations.edges.iter().map(|e| e.result.as_str()).collect();
    let mut op_comparisons = Vec::new();
    data.retain(|d| {
        match (d.triple.subject.as_var(), d.cmp) {
            (Some(v), Some(cmp)) if op_results.contains(v) => {
                op_comparisons.push(OpComparison {
                    variable: v.to_string(),
                    cmp,
                    right: d.triple.object.clone(),
                    pos: d.triple.pos,
                });
                false
            }
            _ => true,
        }
    });

    let mut g = RuleGraph {
        rule: rule.clone(),
        root: 0,
        head_roots: Vec::new(),
        nodes: Vec::new(),
        edges: Vec::new(),
        operations: operations.clone(),
        op_comparisons,
    };
    let root_key = Key::Var(param.clone());
    let root_term = data
        .iter()
        .flat_map(|d| [&d.triple.subject, &d.triple.object])
        .find(|t| key(t).as_ref() == Some(&root_key))
        .cloned()
        .ok_or_else(|| {
            Error::at(ErrorCode::Disconnected, rule.pos, format!("function parameter ?{param} does not occur in the rule body"))
        })?;
    g.root = g.add_node(root_term);

    let mut visited: HashMap<Key, NodeId> = HashMap::new();
    visited.insert(root_key, g.root);
    let mut consumed = vec![false; data.len()];
    let mut level = vec![g.root];
    while !level.is_empty() {
        // (data index, from node, neighbour key, inverse?)
        let mut candidates: Vec<(usize, NodeId, Key, bool)> = Vec::new();
        for &n in &level {
            let nk = key(&g.nodes[n].term);
            for (i, d) in data.iter().enumerate() {
                if consumed[i] {
                    continue;
                }
                let t = &d.triple;
                let sk = key(&t.subject);
                let ok = key(&t.object);
                if sk == nk {
                    if ok.is_some() && ok == sk && d.cmp.is_none() {
                        return Err(Error::at(ErrorCode::Cyclic, t.pos, format!("{} refers to itself", t.subject)));
                    }
                    let leaf = d.cmp.is_some() || t.predicate_iri().unwrap().as_str() == RDF_TYPE || ok.is_none();
                    if leaf {
                        consumed[i] = true;
                        let join = ok.is_some();
                        let target = g.add_node(t.object.clone());
                        g.add_edge(n, target, d, None, false, join, ont);
                    } else if let Some(&existing) = ok.as_ref().and_then(|k| visited.get(k)) {
                        consumed[i] = true;
                        let _ = existing;
                        let target = g.add_node(t.object.clone());
                        g.add_edge(n, target, d, None, false, true, ont);
                    } else {
                        candidates.push((i, n, ok.unwrap(), false));
                    }
                } else if ok.is_some() && ok == nk && d.cmp.is_none() && t.predicate_iri().unwrap().as_str() != RDF_TYPE {
                    let sk = sk.unwrap();
                    if let Some(&src) = visited.get(&sk) {
                        consumed[i] = true;
                        let target = g.add_node(t.object.clone());
                        g.add_edge(src, target, d, None, false, true, ont);
                    } else {
                        candidates.push((i, n, sk, true));
                    }
                }
            }
        }
        let mut best: Vec<(Key, (String, u32, u32), usize, NodeId, bool)> = Vec::new();
        for (i, from, k, inverse) in candidates {
            let t = &data[i].triple;
            let p = t.predicate_iri().unwrap();
            let iri = if inverse { ont.inverse_of(p) } else { p.clone() };
            let rank = (iri.0, t.pos.line, t.pos.col);
            match best.iter_mut().find(|b| b.0 == k) {
                Some(b) if rank < b.1 => *b = (k, rank, i, from, inverse),
                Some(_) => {}
                None => best.push((k, rank, i, from, inverse)),
            }
        }
        let mut next = Vec::new();
        for (k, _, i, from, inverse) in best {
            consumed[i] = true;
            let d = &data[i];
            let term = if inverse { d.triple.subject.clone() } else { d.triple.object.clone() };
            let target = g.add_node(term);
            visited.insert(k, target);
            if inverse {
                let p = d.triple.predicate_iri().unwrap();
                let inv = ont.inverse_of(p);
                g.add_edge(from, target, d, Some(inv), ont.is_synthetic_inverse(p), false, ont);
            } else {
                g.add_edge(from, target, d, None, false, false, ont);
            }
            next.push(target);
        }
        level = next;
    }
    if let Some(i) = consumed.iter().position(|c| !c) {
        let t = &data[i].triple;
        return Err(Error::at(
            ErrorCode::Disconnected,
            t.pos,
            format!(
                "triple {} {} {} cannot be connected to the function parameter ?{param}",
                t.subject, t.predicate, t.object
            ),
        ));
    }

    g.add_head(rule, &visited, ont)?;
    g.sort_edges();
    g.resolve_types(rule, ont)?;
    let ops = g.operations.clone();
    Ok((g, ops))
}

impl RuleGraph {
    fn add_node(&mut self, term: Term) -> NodeId {
        self.nodes.push(GraphNode { term, resolved: None, outgoing: Vec::new(), incoming: None });
        self.nodes.len() - 1
    }

    #[allow(clippy::too_many_arguments)]
    fn add_edge(
        &mut self,
        source: NodeId,
        target: NodeId,
        d: &Data,
        inverse: Option<Iri>,
        synthetic: bool,
        join: bool,
        _ont: &Ontology,
    ) {
        let original = inverse.as_ref().map(|_| d.triple.predicate_iri().unwrap().clone());
        let edge = GraphEdge {
            source,
            target,
            property: inverse.unwrap_or_else(|| d.triple.predicate_iri().unwrap().clone()),
            clause: Clause::Body,
            request: d.request.clone(),
            comparator: d.cmp,
            original,
            synthetic_inverse: synthetic,
            join,
            pos: d.triple.pos,
        };
        self.push_edge(edge);
    }

    fn push_edge(&mut self, edge: GraphEdge) {
        let id = self.edges.len();
        self.nodes[edge.source].outgoing.push(id);
        self.nodes[edge.target].incoming = Some(id);
        self.edges.push(edge);
    }

    fn add_head(&mut self, rule: &AnnotatedRule, visited: &HashMap<Key, NodeId>, _ont: &Ontology) -> Result<()> {
        let mut head: Vec<&Triple> = rule.head.iter().collect();
        head.sort_by_key(|t| (t.pos.line, t.pos.col));
        let mut blanks: HashMap<u32, NodeId> = HashMap::new();
        let mut targets: HashSet<NodeId> = HashSet::new();
        let mut order: Vec<NodeId> = Vec::new();
        for t in head {
            let pred = t.predicate_iri().unwrap().clone();
            if comparator(&pred).is_some() || operator(&pred).is_some() {
                return Err(Error::at(ErrorCode::UnsupportedOperator, t.pos, "builtins are not allowed in rule heads"));
            }
            let source = match &t.subject.kind {
                TermKind::Variable(v) => *visited.get(&Key::Var(v.clone())).ok_or_else(|| {
                    Error::at(ErrorCode::Disconnected, t.subject.pos, format!("head subject ?{v} is not bound in the body"))
                })?,
                TermKind::BlankNode(b) => match blanks.get(b) {
                    Some(&n) => n,
                    None => {
                        let n = self.add_node(t.subject.clone());
                        blanks.insert(*b, n);
                        order.push(n);
                        n
                    }
                },
                _ => {
                    return Err(Error::at(
                        ErrorCode::Disconnected,
                        t.subject.pos,
                        format!("head subject {} must be a variable or blank node", t.subject),
                    ))
                }
            };
            let target = match &t.object.kind {
                TermKind::BlankNode(b) => match blanks.get(b) {
                    Some(&n) => n,
                    None => {
                        let n = self.add_node(t.object.clone());
                        blanks.insert(*b, n);
                        order.push(n);
                        n
                    }
                },
                TermKind::List(_) => {
                    return Err(Error::at(ErrorCode::UnsupportedSyntax, t.object.pos, "lists are not supported in rule heads"))
                }
                _ => self.add_node(t.object.clone()),
            };
            targets.insert(target);
            self.push_edge(GraphEdge {
                source,
                target,
                property: pred,
                clause: Clause::Head,
                request: None,
                comparator: None,
                original: None,
                synthetic_inverse: false,
                join: false,
                pos: t.pos,
            });
        }
        self.head_roots = order.into_iter().filter(|n| !targets.contains(n)).collect();
        Ok(())
    }

    /// Head edges last; untagged edges leading to a request block after local ones; then source order.
    fn sort_edges(&mut self) {
        let mut has_request = vec![false; self.nodes.len()];
        for n in (0..self.nodes.len()).rev() {
            has_request[n] = self.subtree_has_request(n);
        }
        for n in 0..self.nodes.len() {
            let mut out = std::mem::take(&mut self.nodes[n].outgoing);
            out.sort_by_key(|&e| {
                let edge = &self.edges[e];
                (
                    edge.clause == Clause::Head,
                    edge.request.is_none() && has_request[edge.target],
                    edge.pos.line,
                    edge.pos.col,
                )
            });
            self.nodes[n].outgoing = out;
        }
    }

    pub fn subtree_has_request(&self, n: NodeId) -> bool {
        self.nodes[n].outgoing.iter().any(|&e| {
            let edge = &self.edges[e];
            edge.clause == Clause::Body && (edge.request.is_some() || self.subtree_has_request(edge.target))
        })
    }

    fn resolve_types(&mut self, rule: &AnnotatedRule, ont: &Ontology) -> Result<()> {
        let all: Vec<&Triple> = rule.all_body_triples().map(|(t, _)| t).chain(rule.head.iter()).collect();
        let op_results: HashSet<String> = self.operations.edges.iter().map(|e| e.result.clone()).collect();
        let mut cache: HashMap<Key, Option<TypeRef>> = HashMap::new();
        for n in 0..self.nodes.len() {
            let term = self.nodes[n].term.clone();
            let resolved = match key(&term) {
                Some(k) => {
                    if let Some(r) = cache.get(&k) {
                        r.clone()
                    } else {
                        let r = if matches!(&k, Key::Var(v) if op_results.contains(v)) {
                            Some(TypeRef::Datatype(Iri(format!("{XSD_NS}decimal"))))
                        } else {
                            let mut ctx = NodeContext::default();
                            for t in &all {
                                let p = t.predicate_iri().unwrap();
                                if comparator(p).is_some() || matches!(t.subject.kind, TermKind::List(_)) {
                                    continue;
                                }
                                if key(&t.subject).as_ref() == Some(&k) {
                                    if p.as_str() == RDF_TYPE {
                                        if let Some(c) = t.object.as_iri() {
                                            ctx.explicit_types.push(c);
                                        }
                                    } else {
                                        ctx.outgoing.push(p);
                                    }
                                }
                                if key(&t.object).as_ref() == Some(&k) && p.as_str() != RDF_TYPE {
                                    ctx.incoming.push(p);
                                }
                            }
                            Some(ont.type_of_node(&ctx).map_err(|e| Error { pos: Some(term.pos), ..e }).map_err(|e| {
                                Error { message: format!("{}: {}", term, e.message), ..e }
                            })?)
                        };
                        cache.insert(k, r.clone());
                        r
                    }
                }
                None => match &term.kind {
                    TermKind::Literal(l) => Some(TypeRef::Datatype(l.datatype())),
                    TermKind::Iri(_) => {
                        let edge = self.nodes[n].incoming.map(|e| &self.edges[e]);
                        match edge {
                            Some(e) if !e.is_type() && e.comparator.is_none() => ont
                                .property(&e.property)
                                .range
                                .map(|r| if ont.is_class(&r) { TypeRef::Class(r) } else { TypeRef::Datatype(r) }),
                            _ => None,
                        }
                    }
                    _ => None,
                },
            };
            self.nodes[n].resolved = resolved;
        }
        Ok(())
    }

    pub fn out_edges(&self, n: NodeId) -> impl Iterator<Item = &GraphEdge> {
        self.nodes[n].outgoing.iter().map(move |&e| &self.edges[e])
    }

    pub fn class_of(&self, n: NodeId) -> Option<&Iri> {
        match &self.nodes[n].resolved {
            Some(TypeRef::Class(c)) => Some(c),
            _ => None,
        }
    }

    /// Dictionary key for a node reached through a multi-valued property: an rdf:type
    /// value other than the node's own class.
    pub fn dictionary_key(&self, n: NodeId) -> Option<&Iri> {
        let own = self.class_of(n);
        self.out_edges(n)
            .filter(|e| e.clause == Clause::Body && e.is_type() && e.request.is_none())
            .filter_map(|e| self.nodes[e.target].term.as_iri())
            .find(|t| Some(*t) != own)
    }

    pub fn param(&self) -> &str {
        self.nodes[self.root].term.as_var().unwrap_or_default()
    }

    /// Predicates of data triples in the body (excluding rdf:type and builtins).
    pub fn body_predicates(&self) -> HashSet<Iri> {
        self.rule
            .all_body_triples()
            .filter_map(|(t, _)| t.predicate_iri())
            .filter(|p| p.as_str() != RDF_TYPE && comparator(p).is_none() && operator(p).is_none())
            .cloned()
            .collect()
    }

    pub fn head_predicates(&self) -> HashSet<Iri> {
        self.rule
            .head
            .iter()
            .filter_map(|t| t.predicate_iri())
            .filter(|p| p.as_str() != RDF_TYPE)
            .cloned()
            .collect()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph rule {\n  rankdir=LR;\n");
        for (i, n) in self.nodes.iter().enumerate() {
            let mut label = short(&n.term);
            if let Some(t) = &n.resolved {
                label.push_str(&format!("\\n{}", t.iri().local_name()));
            }
            writeln!(out, "  n{i} [label=\"{}\"];", label.replace('"', "\\\"")).unwrap();
        }
        for e in &self.edges {
            let mut label = match e.comparator {
                Some(c) => format!("{} [{}]", e.property.local_name(), c.symbol()),
                None if e.is_type() => "a".to_string(),
                None => e.property.local_name().to_string(),
            };
            if let Some(o) = &e.original {
                label.push_str(&format!(" (inverse of {})", o.local_name()));
            }
            if let Some(r) = &e.request {
                label.push_str(&format!("\\nrequest: {}", r.as_str()));
            }
            if e.join {
                label.push_str(" [join]");
            }
            let style = if e.clause == Clause::Head { ", style=dashed" } else { "" };
            writeln!(out, "  n{} -> n{} [label=\"{}\"{}];", e.source, e.target, label.replace('"', "\\\""), style)
                .unwrap();
        }
        out.push_str("}\n");
        out
    }
}

fn short(t: &Term) -> String {
    match &t.kind {
        TermKind::Iri(i) => i.local_name().to_string(),
        TermKind::BlankNode(_) => "[]".to_string(),
        TermKind::List(items) => format!("({})", items.iter().map(short).collect::<Vec<_>>().join(" ")),
        _ => t.to_string(),
    }
}

/// Orders rules so each follows the rules inferring its body predicates; the order must be unique.
pub fn order_rule_chain(graphs: Vec<RuleGraph>) -> Result<Vec<RuleGraph>> {
    let heads: Vec<HashSet<Iri>> = graphs.iter().map(|g| g.head_predicates()).collect();
    let bodies: Vec<HashSet<Iri>> = graphs.iter().map(|g| g.body_predicates()).collect();
    let n = graphs.len();
    let mut deps: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    for i in 0..n {
        for j in 0..n {
            if !bodies[i].is_disjoint(&heads[j]) {
                if i == j {
                    return Err(Error::at(ErrorCode::ChainCycle, graphs[i].rule.pos, "rule depends on its own inferences"));
                }
                deps[i].insert(j);
            }
        }
    }
    let mut done: Vec<usize> = Vec::new();
    while done.len() < n {
        let ready: Vec<usize> =
            (0..n).filter(|i| !done.contains(i) && deps[*i].iter().all(|d| done.contains(d))).collect();
        match ready.as_slice() {
            [one] => done.push(*one),
            [] => {
                let i = (0..n).find(|i| !done.contains(i)).unwrap();
                return Err(Error::at(ErrorCode::ChainCycle, graphs[i].rule.pos, "rules depend on each other cyclically"));
            }
            [a, b, ..] => {
                return Err(Error::at(
                    ErrorCode::ChainBranch,
                    graphs[*b].rule.pos,
                    format!(
                        "rules at {} and {} could both come next; rules must form a single sequential chain",
                        graphs[*a].rule.pos, graphs[*b].rule.pos
                    ),
                ))
            }
        }
    }
    let mut slots: Vec<Option<RuleGraph>> = graphs.into_iter().map(Some).collect();
    Ok(done.into_iter().map(|i| slots[i].take().unwrap()).collect())
}
