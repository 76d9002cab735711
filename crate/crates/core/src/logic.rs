//! Application logic generation: rule graphs to bridge IR functions.
//!
//! Each rule is walked from its function parameter. Nodes reached through single-valued
//! properties become property paths guarded by `exists`; multi-valued properties open loop
//! scopes (or keyed dictionary access); request-tagged edges open request scopes whose
//! conditions run after the remote result arrives. The scope tree is then lowered to statements.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, ErrorCode, Result};
use crate::graph::{Clause, GraphEdge, NodeId, RuleGraph};
use crate::ir::*;
use crate::n3::{Iri, Literal, Term, TermKind, RDF_TYPE};
use crate::ontology::Ontology;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogicOptions {
    /// Lower `cg:request` blocks to remote requests; when off, request edges are plain path steps.
    pub requests: bool,
}

impl Default for LogicOptions {
    fn default() -> Self {
        LogicOptions { requests: true }
    }
}

pub const ENTRY_FUNCTION: &str = "process";

/// Compiles an ordered rule chain into the single entry function plus its event declarations.
pub fn generate_program(
    graphs: &[RuleGraph],
    model: &Model,
    ont: &Ontology,
    opts: LogicOptions,
) -> Result<BridgeProgram> {
    let first = graphs.first().ok_or_else(|| Error::new(ErrorCode::Disconnected, "no rules to compile"))?;
    let param = first.param().to_string();
    let param_ty = first
        .class_of(first.root)
        .cloned()
        .ok_or_else(|| Error::at(ErrorCode::LiteralTyping, first.rule.pos, "function parameter must be an entity"))?;
    let mut function = Function {
        name: ENTRY_FUNCTION.into(),
        params: vec![Param { name: param.clone(), ty: ModelType::Adt(param_ty.clone()) }],
        preamble: Block::default(),
        logic: Vec::new(),
    };
    let mut events: Vec<EventDecl> = Vec::new();
    let mut callback = 0;
    let mut assigned: HashSet<Iri> = HashSet::new();
    for g in graphs {
        if g.class_of(g.root) != Some(&param_ty) {
            return Err(Error::at(
                ErrorCode::Unification,
                g.rule.pos,
                format!("rule parameter ?{} is not a {}", g.param(), param_ty.local_name()),
            ));
        }
        let out = generate_rule_logic(g, model, ont, opts, &param, &mut callback)?;
        // operations over fields assigned by earlier rules are recomputed in place
        if out.preamble.iter().any(|s| reads_any(s, &assigned)) {
            function.logic.extend(out.preamble.iter().cloned());
        }
        assigned.extend(g.head_predicates());
        function.preamble.statements.extend(out.preamble);
        function.logic.extend(out.statements);
        if let Some(ev) = out.event {
            match events.iter().find(|e| e.name == ev.name) {
                Some(e) if e.payload != ev.payload => {
                    return Err(Error::at(
                        ErrorCode::FieldTypeConflict,
                        g.rule.pos,
                        format!("event {} is emitted with different payload types", ev.name),
                    ))
                }
                Some(_) => {}
                None => events.push(ev),
            }
        }
    }
    let mut seen = HashSet::new();
    for s in &function.preamble.statements {
        if let Statement::Assignment { target: Operand::Variable { name }, .. } = s {
            if !seen.insert(name.clone()) {
                return Err(Error::new(
                    ErrorCode::UnresolvableOperations,
                    format!("operation result ?{name} is computed by more than one rule"),
                ));
            }
        }
    }
    Ok(BridgeProgram { model: model.clone(), functions: vec![function], events })
}

fn reads_any(s: &Statement, fields: &HashSet<Iri>) -> bool {
    fn operand(o: &Operand, fields: &HashSet<Iri>) -> bool {
        match o {
            Operand::PropertyPath { start, steps } => operand(start, fields) || steps.iter().any(|x| fields.contains(&x.field)),
            Operand::Operation { operands, .. } => operands.iter().any(|x| operand(x, fields)),
            _ => false,
        }
    }
    matches!(s, Statement::Assignment { value, .. } if operand(value, fields))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleLogic {
    pub preamble: Vec<Statement>,
    pub statements: Vec<Statement>,
    pub event: Option<EventDecl>,
}

type ScopeId = usize;

#[derive(Debug)]
enum ScopeKind {
    Root,
    Loop { start: Operand, var: String },
    Request(Statement),
}

#[derive(Debug)]
enum Item {
    Cond(Condition),
    Child(ScopeId),
}

#[derive(Debug)]
struct Scope {
    kind: ScopeKind,
    parent: Option<ScopeId>,
    items: Vec<Item>,
    stmts: Vec<Statement>,
}

#[derive(Debug, Clone)]
struct Binding {
    op: Operand,
    scope: ScopeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Path,
    Loop,
    Result,
}

/// A comparison against a variable whose binding may not be known yet.
struct Deferred {
    scope: ScopeId,
    left: Operand,
    cmp: Cmp,
    var: String,
    /// Left ends in a multi-valued field: compare existentially over its values.
    multi: Option<String>,
    pos: crate::n3::Pos,
}

struct Gen<'a> {
    g: &'a RuleGraph,
    model: &'a Model,
    ont: &'a Ontology,
    opts: LogicOptions,
    scopes: Vec<Scope>,
    var_map: HashMap<String, Binding>,
    mode: HashMap<NodeId, Mode>,
    /// Nodes whose incoming edge is a request link (the remote entity).
    remote: HashSet<NodeId>,
    names: HashSet<String>,
    deferred: Vec<Deferred>,
    callback: &'a mut u32,
}

pub fn generate_rule_logic(
    g: &RuleGraph,
    model: &Model,
    ont: &Ontology,
    opts: LogicOptions,
    param: &str,
    callback: &mut u32,
) -> Result<RuleLogic> {
    let mut names: HashSet<String> = HashSet::new();
    names.insert(param.to_string());
    for n in &g.nodes {
        if let Some(v) = n.term.as_var() {
            names.insert(v.to_string());
        }
    }
    let mut remote = HashSet::new();
    for e in &g.edges {
        if e.clause == Clause::Body && e.request.is_some() && !e.is_type() && e.comparator.is_none() {
            let src_incoming = g.nodes[e.source].incoming.map(|i| &g.edges[i]);
            let src_is_remote = src_incoming.is_some_and(|i| i.request.is_some() && !i.is_type());
            if !src_is_remote && !e.join && g.nodes[e.target].term.as_var().is_some() {
                remote.insert(e.target);
            }
        }
    }
    let mut gen = Gen {
        g,
        model,
        ont,
        opts,
        scopes: vec![Scope { kind: ScopeKind::Root, parent: None, items: Vec::new(), stmts: Vec::new() }],
        var_map: HashMap::new(),
        mode: HashMap::new(),
        remote,
        names,
        deferred: Vec::new(),
        callback,
    };
    let root_op = Operand::var(param);
    gen.var_map.insert(g.param().to_string(), Binding { op: root_op.clone(), scope: 0 });
    gen.mode.insert(g.root, Mode::Path);
    gen.visit(g.root, &root_op, 0)?;
    let preamble = gen.operations()?;
    for c in &g.op_comparisons {
        let right = gen.value_of(&c.right, 0, c.pos)?;
        gen.scopes[0].items.push(Item::Cond(Condition::cmp(Operand::var(&c.variable), c.cmp, right)));
    }
    gen.resolve_deferred()?;
    let event = gen.head()?;
    let statements = match gen.lower(0) {
        Lowered::Stmts(s) => s,
        Lowered::Cond(_) => unreachable!("root scope lowers to statements"),
    };
    Ok(RuleLogic { preamble, statements, event })
}

enum Lowered {
    Cond(Condition),
    Stmts(Vec<Statement>),
}

fn conj(mut conds: Vec<Condition>) -> Condition {
    if conds.len() == 1 {
        conds.pop().unwrap()
    } else {
        Condition::and(conds)
    }
}

pub fn literal_value(l: &Literal) -> LiteralValue {
    match l {
        Literal::String(s) => LiteralValue::String(s.clone()),
        Literal::Integer(i) => LiteralValue::Integer(*i),
        Literal::Decimal(d) => LiteralValue::Decimal(d.clone()),
    }
}

/// Literal form of a concrete term (literal, IRI, or list thereof).
pub fn term_value(t: &Term) -> Option<LiteralValue> {
    match &t.kind {
        TermKind::Literal(l) => Some(literal_value(l)),
        TermKind::Iri(i) => Some(LiteralValue::Iri(i.clone())),
        TermKind::List(items) => items.iter().map(term_value).collect::<Option<Vec<_>>>().map(LiteralValue::List),
        _ => None,
    }
}

impl Gen<'_> {
    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut i = 2;
        while self.names.contains(&name) {
            name = format!("{base}{i}");
            i += 1;
        }
        self.names.insert(name.clone());
        name
    }

    fn child(&mut self, parent: ScopeId, kind: ScopeKind) -> ScopeId {
        self.scopes.push(Scope { kind, parent: Some(parent), items: Vec::new(), stmts: Vec::new() });
        let id = self.scopes.len() - 1;
        self.scopes[parent].items.push(Item::Child(id));
        id
    }

    fn ancestors(&self, mut s: ScopeId) -> Vec<ScopeId> {
        let mut out = vec![s];
        while let Some(p) = self.scopes[s].parent {
            out.push(p);
            s = p;
        }
        out
    }

    /// The deeper of two scopes on one ancestor chain.
    fn deeper(&self, a: ScopeId, b: ScopeId) -> Option<ScopeId> {
        if self.ancestors(a).contains(&b) {
            Some(a)
        } else if self.ancestors(b).contains(&a) {
            Some(b)
        } else {
            None
        }
    }

    fn cond(&mut self, scope: ScopeId, c: Condition) {
        self.scopes[scope].items.push(Item::Cond(c));
    }

    fn field(&self, n: NodeId, e: &GraphEdge) -> Result<(Step, ModelProperty)> {
        let class = self.g.class_of(n).ok_or_else(|| {
            Error::at(
                ErrorCode::MissingField,
                e.pos,
                format!("{} is not an entity and has no field {}", self.g.nodes[n].term, e.property.local_name()),
            )
        })?;
        let f = self.model.step_field(class, &e.property).ok_or_else(|| {
            Error::at(
                ErrorCode::MissingField,
                e.pos,
                format!("{} is not a field of {}", e.property.local_name(), class.local_name()),
            )
        })?;
        let step = Step { adt: class.clone(), field: e.property.clone(), name: f.name.clone(), key: None, null_safe: false };
        Ok((step, f))
    }

    /// Key-property step for comparing an entity-valued field with a literal.
    fn key_step(&self, f: &ModelProperty, e: &GraphEdge) -> Result<Option<Step>> {
        let ModelType::Adt(range) = &f.value_type else { return Ok(None) };
        if !matches!(self.g.nodes[e.target].term.kind, TermKind::Literal(_)) {
            return Ok(None);
        }
        let key = self.ont.key_property(range).ok_or_else(|| {
            Error::at(
                ErrorCode::LiteralTyping,
                e.pos,
                format!("literal compared with {} values, which have no key", range.local_name()),
            )
        })?;
        let kf = self.model.step_field(range, key).ok_or_else(|| {
            Error::at(ErrorCode::MissingField, e.pos, format!("{} has no key field {}", range.local_name(), key.local_name()))
        })?;
        Ok(Some(Step { adt: range.clone(), field: key.clone(), name: kf.name, key: None, null_safe: true }))
    }

    fn visit(&mut self, n: NodeId, path: &Operand, scope: ScopeId) -> Result<()> {
        let edges: Vec<GraphEdge> = self.g.out_edges(n).filter(|e| e.clause == Clause::Body).cloned().collect();
        for e in &edges {
            self.edge(n, e, path, scope)?;
        }
        Ok(())
    }

    fn edge(&mut self, n: NodeId, e: &GraphEdge, path: &Operand, scope: ScopeId) -> Result<()> {
        let source_remote = self.remote.contains(&n);
        if e.request.is_some() && source_remote {
            // Consumed as request type/parameters, or dropped without requests.
            return Ok(());
        }
        if e.request.is_some() && e.is_type() {
            return Ok(());
        }
        let target = &self.g.nodes[e.target];
        if let Some(cmp) = e.comparator {
            match term_value(&target.term) {
                Some(v) => self.cond(scope, Condition::cmp(path.clone(), cmp, Operand::lit(v))),
                None => {
                    let var = target.term.as_var().ok_or_else(|| {
                        Error::at(ErrorCode::UnsupportedSyntax, e.pos, "comparisons need a variable or concrete value")
                    })?;
                    self.deferred.push(Deferred {
                        scope,
                        left: path.clone(),
                        cmp,
                        var: var.to_string(),
                        multi: None,
                        pos: e.pos,
                    });
                }
            }
            return Ok(());
        }
        if e.is_type() {
            if self.mode.get(&n) == Some(&Mode::Loop) {
                let class = self.g.class_of(n).cloned().unwrap_or_else(|| Iri::new(RDF_TYPE));
                if let Some(t) = target.term.as_iri() {
                    let step = Step { adt: class, field: Iri::new(RDF_TYPE), name: "type".into(), key: None, null_safe: false };
                    self.cond(scope, Condition::cmp(path.push(step), Cmp::Equal, Operand::lit(LiteralValue::Iri(t.clone()))));
                }
            }
            return Ok(());
        }
        if e.request.is_some() && self.opts.requests && self.remote.contains(&e.target) {
            return self.request(n, e, path, scope);
        }
        let (step, f) = self.field(n, e)?;
        let multi = f.max == Max::Unbounded;
        if e.join {
            let var = target.term.as_var().unwrap().to_string();
            let lv = if multi { Some(self.fresh(e.property.local_name())) } else { None };
            let left = path.push(step);
            self.deferred.push(Deferred { scope, left, cmp: Cmp::Equal, var, multi: lv, pos: e.pos });
            return Ok(());
        }
        if let Some(v) = term_value(&target.term) {
            let key = self.key_step(&f, e)?;
            let cond = if multi {
                let lv = self.fresh(&crate::adt::camel(e.property.local_name(), false));
                let mut left = Operand::var(&lv);
                if let Some(k) = key {
                    left = left.push(k);
                }
                Condition::Qualified {
                    qualifier: Qualifier::Existential,
                    start: path.push(step),
                    loop_var: lv,
                    inner: Box::new(Condition::cmp(left, Cmp::Equal, Operand::lit(v))),
                }
            } else {
                let mut left = path.push(step);
                if let Some(k) = key {
                    left = left.push(k);
                }
                Condition::cmp(left, Cmp::Equal, Operand::lit(v))
            };
            self.cond(scope, cond);
            return Ok(());
        }
        let var = target.term.as_var().map(str::to_string);
        if multi {
            if let Some(key) = self.g.dictionary_key(e.target).cloned() {
                let mut step = step;
                step.key = Some(LiteralValue::Iri(key));
                let p = path.push(step);
                self.bind(e.target, var.as_deref(), &p, scope, Mode::Path);
                return self.visit(e.target, &p, scope);
            }
            let lv = match &var {
                Some(v) => v.clone(),
                None => self.fresh(&crate::adt::camel(e.property.local_name(), false)),
            };
            let s = self.child(scope, ScopeKind::Loop { start: path.push(step), var: lv.clone() });
            let p = Operand::var(&lv);
            self.bind(e.target, var.as_deref(), &p, s, Mode::Loop);
            return self.visit(e.target, &p, s);
        }
        let p = path.push(step);
        let body: Vec<&GraphEdge> = self.g.out_edges(e.target).filter(|x| x.clause == Clause::Body).collect();
        if body.is_empty() || body.iter().any(|x| x.comparator.is_none()) {
            self.cond(scope, Condition::exists(p.clone()));
        }
        self.bind(e.target, var.as_deref(), &p, scope, Mode::Path);
        self.visit(e.target, &p, scope)
    }

    fn bind(&mut self, n: NodeId, var: Option<&str>, op: &Operand, scope: ScopeId, mode: Mode) {
        self.mode.insert(n, mode);
        if let Some(v) = var {
            self.var_map.insert(v.to_string(), Binding { op: op.clone(), scope });
        }
    }

    fn request(&mut self, n: NodeId, e: &GraphEdge, path: &Operand, scope: ScopeId) -> Result<()> {
        for s in self.ancestors(scope) {
            match self.scopes[s].kind {
                ScopeKind::Loop { .. } => {
                    return Err(Error::at(ErrorCode::UnsupportedNesting, e.pos, "remote request inside an iteration"))
                }
                ScopeKind::Request(_) => {
                    return Err(Error::at(ErrorCode::UnsupportedNesting, e.pos, "remote request depends on another request"))
                }
                ScopeKind::Root => {}
            }
        }
        let t = e.target;
        let location = e.request.clone().unwrap();
        let link = e.original.clone().unwrap_or_else(|| self.ont.inverse_of(&e.property));
        let mut select =
            vec![Parameter { property: link.clone(), name: link.local_name().to_string(), value: path.clone() }];
        let mut resource_type = None;
        let tagged: Vec<GraphEdge> =
            self.g.out_edges(t).filter(|x| x.clause == Clause::Body && x.request.is_some()).cloned().collect();
        for x in &tagged {
            let term = &self.g.nodes[x.target].term;
            if x.is_type() {
                resource_type = term.as_iri().cloned();
                continue;
            }
            if x.comparator.is_some() {
                return Err(Error::at(
                    ErrorCode::UnsupportedNesting,
                    x.pos,
                    "request parameters must be equalities on the requested resource",
                ));
            }
            let value = match term_value(term) {
                Some(v) => Operand::lit(v),
                None => {
                    let bound = term.as_var().and_then(|v| self.var_map.get(v)).filter(|b| self.ancestors(scope).contains(&b.scope));
                    match bound {
                        Some(b) if x.join => b.op.clone(),
                        _ => {
                            return Err(Error::at(
                                ErrorCode::UnboundRequestValue,
                                x.pos,
                                format!("request parameter {} has value {} bound nowhere else", x.property.local_name(), term),
                            ))
                        }
                    }
                }
            };
            select.push(Parameter { property: x.property.clone(), name: x.property.local_name().to_string(), value });
        }
        let resource_type = resource_type.ok_or_else(|| {
            Error::at(ErrorCode::RequestWithoutType, e.pos, format!("requested resource {} has no rdf:type", self.g.nodes[t].term))
        })?;
        let _ = n;
        let result = self.fresh("r");
        *self.callback += 1;
        let stmt = Statement::RemoteRequest {
            location,
            resource_type,
            select,
            result: result.clone(),
            callback: *self.callback,
        };
        let s = self.child(scope, ScopeKind::Request(stmt));
        let p = Operand::var(&result);
        let var = self.g.nodes[t].term.as_var().map(str::to_string);
        self.bind(t, var.as_deref(), &p, s, Mode::Result);
        self.visit(t, &p, s)
    }

    fn value_of(&self, t: &Term, scope: ScopeId, pos: crate::n3::Pos) -> Result<Operand> {
        if let Some(v) = term_value(t) {
            return Ok(Operand::lit(v));
        }
        let var = t.as_var().ok_or_else(|| Error::at(ErrorCode::Unification, pos, format!("{t} cannot be used as a value")))?;
        match self.var_map.get(var) {
            Some(b) if self.ancestors(scope).contains(&b.scope) => Ok(b.op.clone()),
            _ => Err(Error::at(ErrorCode::Unification, pos, format!("?{var} has no binding visible here"))),
        }
    }

    /// Resolves operations in dependency order into preamble assignments.
    fn operations(&mut self) -> Result<Vec<Statement>> {
        let mut pending: Vec<_> = self.g.operations.edges.iter().collect();
        let mut preamble = Vec::new();
        while !pending.is_empty() {
            let mut progressed = false;
            let mut rest = Vec::new();
            for op in pending {
                let mut operands = Vec::new();
                let mut ready = true;
                for t in &op.operands {
                    if let Some(v) = term_value(t) {
                        operands.push(Operand::lit(v));
                        continue;
                    }
                    let Some(var) = t.as_var() else {
                        return Err(Error::at(ErrorCode::UnsupportedOperator, t.pos, "operands must be variables or literals"));
                    };
                    match self.var_map.get(var) {
                        Some(b) if b.scope == 0 => operands.push(b.op.clone()),
                        Some(_) => {
                            return Err(Error::at(
                                ErrorCode::UnsupportedNesting,
                                t.pos,
                                format!("operand ?{var} is bound inside an iteration or request"),
                            ))
                        }
                        None => {
                            ready = false;
                            break;
                        }
                    }
                }
                if !ready {
                    rest.push(op);
                    continue;
                }
                progressed = true;
                let value = Operand::Operation { operator: op.operator, operands };
                preamble.push(Statement::Assignment { target: Operand::var(&op.result), value });
                self.var_map.insert(op.result.clone(), Binding { op: Operand::var(&op.result), scope: 0 });
            }
            if !progressed {
                let names: Vec<String> = rest.iter().map(|o| format!("?{}", o.result)).collect();
                return Err(Error::at(
                    ErrorCode::UnresolvableOperations,
                    rest[0].pos,
                    format!("no operations could be resolved ({})", names.join(", ")),
                ));
            }
            pending = rest;
        }
        Ok(preamble)
    }

    fn resolve_deferred(&mut self) -> Result<()> {
        for d in std::mem::take(&mut self.deferred) {
            let b = self.var_map.get(&d.var).cloned().ok_or_else(|| {
                Error::at(ErrorCode::Unification, d.pos, format!("?{} is not bound by a data triple", d.var))
            })?;
            let scope = self.deeper(d.scope, b.scope).ok_or_else(|| {
                Error::at(
                    ErrorCode::UnsupportedNesting,
                    d.pos,
                    format!("?{} is compared across independent iterations or requests", d.var),
                )
            })?;
            let c = match d.multi {
                Some(lv) => Condition::Qualified {
                    qualifier: Qualifier::Existential,
                    start: d.left,
                    loop_var: lv.clone(),
                    inner: Box::new(Condition::cmp(Operand::var(&lv), d.cmp, b.op)),
                },
                None => Condition::cmp(d.left, d.cmp, b.op),
            };
            self.cond(scope, c);
        }
        Ok(())
    }

    fn head(&mut self) -> Result<Option<EventDecl>> {
        let g = self.g;
        let head_edges: Vec<&GraphEdge> = g.edges.iter().filter(|e| e.clause == Clause::Head).collect();
        if head_edges.is_empty() {
            return Ok(None);
        }
        // The head runs where every request result and head variable is in scope.
        let mut required: Vec<ScopeId> = (0..self.scopes.len())
            .filter(|&s| matches!(self.scopes[s].kind, ScopeKind::Request(_)))
            .collect();
        for e in &head_edges {
            for n in [e.source, e.target] {
                if let Some(b) = g.nodes[n].term.as_var().and_then(|v| self.var_map.get(v)) {
                    required.push(b.scope);
                }
            }
        }
        let mut place = 0;
        for s in required {
            place = self.deeper(place, s).ok_or_else(|| {
                Error::at(
                    ErrorCode::UnsupportedNesting,
                    g.rule.pos,
                    "head depends on independent iterations or requests",
                )
            })?;
        }
        let blank_roots: HashSet<NodeId> = g.head_roots.iter().copied().collect();
        let mut created: HashMap<NodeId, String> = HashMap::new();
        let mut stmts = Vec::new();
        let mut event = None;
        for e in head_edges {
            let src = e.source;
            if blank_roots.contains(&src) {
                if created.contains_key(&src) {
                    continue;
                }
                let v = self.fresh("v");
                let value = self.create(src, place)?;
                created.insert(src, v.clone());
                stmts.push(Statement::Assignment { target: Operand::var(&v), value });
                continue;
            }
            if g.nodes[src].term.is_blank() {
                // nested head blank, built inside its parent's constructor
                continue;
            }
            if e.is_type() {
                return Err(Error::at(ErrorCode::UnsupportedSyntax, e.pos, "rule heads cannot assert rdf:type of existing entities"));
            }
            let var = g.nodes[src].term.as_var().unwrap_or_default();
            let target = self
                .var_map
                .get(var)
                .map(|b| b.op.clone())
                .ok_or_else(|| Error::at(ErrorCode::Unification, e.pos, format!("?{var} has no body binding")))?;
            let (step, _) = self.field(src, e)?;
            let value = self.head_value(e.target, place, e.pos)?;
            stmts.push(Statement::Assignment { target: target.push(step), value });
        }
        if let Some(name) = &g.rule.event_name {
            let root = g.head_roots.first().ok_or_else(|| {
                Error::at(ErrorCode::EventWithoutAdt, g.rule.pos, format!("event {name} needs a blank node in the head"))
            })?;
            let class = g.class_of(*root).cloned().unwrap();
            stmts.push(Statement::EmitEvent { name: name.clone(), payload: Operand::var(&created[root]) });
            event = Some(EventDecl { name: name.clone(), payload: ModelType::Adt(class) });
        }
        self.scopes[place].stmts.extend(stmts);
        Ok(event)
    }

    fn create(&mut self, n: NodeId, scope: ScopeId) -> Result<Operand> {
        let g = self.g;
        let class = g.class_of(n).cloned().ok_or_else(|| {
            Error::at(ErrorCode::NoTypingSource, g.nodes[n].term.pos, "head blank node has no class")
        })?;
        let mut args = Vec::new();
        let edges: Vec<GraphEdge> = g.out_edges(n).cloned().collect();
        for e in &edges {
            if e.is_type() {
                continue;
            }
            let (step, _) = self.field(n, e)?;
            let value = self.head_value(e.target, scope, e.pos)?;
            args.push(Statement::Assignment { target: Operand::var("self").push(step), value });
        }
        Ok(Operand::CreateAdt { adt: class, arguments: Block { statements: args } })
    }

    fn head_value(&mut self, t: NodeId, scope: ScopeId, pos: crate::n3::Pos) -> Result<Operand> {
        if self.g.nodes[t].term.is_blank() {
            return self.create(t, scope);
        }
        let term = self.g.nodes[t].term.clone();
        self.value_of(&term, scope, pos)
    }

    fn lower(&mut self, s: ScopeId) -> Lowered {
        let items = std::mem::take(&mut self.scopes[s].items);
        let mut conds = Vec::new();
        let mut body = Vec::new();
        for item in items {
            match item {
                Item::Cond(c) => conds.push(c),
                Item::Child(c) => match self.lower(c) {
                    Lowered::Cond(q) => conds.push(q),
                    Lowered::Stmts(st) => body.extend(st),
                },
            }
        }
        body.extend(std::mem::take(&mut self.scopes[s].stmts));
        let kind = std::mem::replace(&mut self.scopes[s].kind, ScopeKind::Root);
        match kind {
            ScopeKind::Root if conds.is_empty() => Lowered::Stmts(body),
            ScopeKind::Root => {
                Lowered::Stmts(vec![Statement::IfThen { condition: conj(conds), then: Block { statements: body } }])
            }
            ScopeKind::Loop { start, var } => match (conds.is_empty(), body.is_empty()) {
                (false, false) => Lowered::Stmts(vec![Statement::Iteration {
                    start,
                    loop_var: var,
                    body: Box::new(Statement::IfThen { condition: conj(conds), then: Block { statements: body } }),
                }]),
                (false, true) => Lowered::Cond(Condition::Qualified {
                    qualifier: Qualifier::Existential,
                    start,
                    loop_var: var,
                    inner: Box::new(conj(conds)),
                }),
                (true, false) => Lowered::Stmts(vec![Statement::Iteration {
                    start,
                    loop_var: var,
                    body: Box::new(Statement::Block(Block { statements: body })),
                }]),
                (true, true) => Lowered::Cond(Condition::Qualified {
                    qualifier: Qualifier::Existential,
                    start,
                    loop_var: var.clone(),
                    inner: Box::new(Condition::exists(Operand::var(&var))),
                }),
            },
            ScopeKind::Request(stmt) => {
                let mut out = vec![stmt];
                if conds.is_empty() {
                    out.extend(body);
                } else {
                    out.push(Statement::IfThen { condition: conj(conds), then: Block { statements: body } });
                }
                Lowered::Stmts(out)
            }
        }
    }
}
