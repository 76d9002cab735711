//! Seeded random fixtures over a compiled rule set, for equivalence testing against the
//! naive evaluator.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value as Json};

use super::fixture::{render_json, Fixture, RemoteEntry};
use super::naive::{fixture_triples, naive_rule_eval, Node};
use crate::compile::Compilation;
use crate::error::{Error, ErrorCode, Result};
use crate::ir::{request_sites, Max, ModelAdt, ModelProperty, ModelType, Parameter};
use crate::logic::ENTRY_FUNCTION;
use crate::n3::{Iri, Literal, Term, TermKind, RDF_TYPE};
use crate::ontology::TypeRef;

const MAX_ITEMS: usize = 3;
const MAX_RESULTS: usize = 2;
const MAX_DEPTH: usize = 4;
const ATTEMPTS: usize = 200;
const DATA_NS: &str = "http://example.org/data#";
const OTHER_IRI: &str = "http://example.org/data#Other";

#[derive(Debug, Clone)]
enum Lit {
    Str(String),
    Num(f64),
    Iri(String),
}

impl Lit {
    fn json(&self) -> Json {
        match self {
            Lit::Str(s) | Lit::Iri(s) => json!(s),
            Lit::Num(n) => json!(n),
        }
    }
}

struct Site {
    resource: Iri,
    select: Vec<Parameter>,
}

/// Draws fixtures with literal pools taken from the rules' constants plus one
/// out-of-pool value per datatype. Fixtures whose inference closure gives a
/// single-valued property two values are rejected and redrawn.
pub struct FixtureGenerator<'a> {
    comp: &'a Compilation,
    entry: Iri,
    pools: HashMap<Iri, Vec<Lit>>,
    /// Pools for a property used on a specific subject class.
    scoped: HashMap<(Iri, Iri), Vec<Lit>>,
    numbers: Vec<f64>,
    classes: Vec<Iri>,
    inferred: HashSet<Iri>,
    sites: Vec<Site>,
    remote_types: HashSet<Iri>,
}

struct Draw<'r, R: Rng> {
    rng: &'r mut R,
    next_id: usize,
    /// (id, class) of every entity placed in the request tree.
    entities: Vec<(String, Iri)>,
    /// Per-fixture probability of drawing from the rule constants and of filling optional fields.
    bias: f64,
}

impl<R: Rng> Draw<'_, R> {
    fn id(&mut self) -> String {
        self.next_id += 1;
        format!("{DATA_NS}e{}", self.next_id)
    }
}

impl<'a> FixtureGenerator<'a> {
    pub fn new(comp: &'a Compilation) -> Result<Self> {
        let f = comp
            .program
            .functions
            .iter()
            .find(|f| f.name == ENTRY_FUNCTION)
            .ok_or_else(|| Error::new(ErrorCode::Runtime, "no entry function"))?;
        let entry = f.params[0].ty.adt().cloned().ok_or_else(|| Error::new(ErrorCode::Runtime, "entry is not an ADT"))?;
        let sites: Vec<Site> = request_sites(f)?
            .into_iter()
            .map(|s| Site { resource: s.resource_type, select: s.select })
            .collect();
        let remote_types = sites.iter().map(|s| s.resource.clone()).collect();
        let mut g = FixtureGenerator {
            comp,
            entry,
            pools: HashMap::new(),
            scoped: HashMap::new(),
            numbers: vec![0.0, 1.0, 1.6, 1.8, 42.0, 70.0],
            classes: Vec::new(),
            inferred: HashSet::new(),
            sites,
            remote_types,
        };
        g.collect_constants();
        Ok(g)
    }

    fn collect_constants(&mut self) {
        for graph in &self.comp.graphs {
            self.inferred.extend(graph.head_predicates());
            let triples: Vec<_> = graph.rule.all_body_triples().map(|(t, _)| t.clone()).collect();
            let class_of = |t: &Term| {
                graph.nodes.iter().find(|n| n.term.kind == t.kind).and_then(|n| match &n.resolved {
                    Some(TypeRef::Class(c)) => Some(c.clone()),
                    _ => None,
                })
            };
            // variable -> (subject class, property) pairs leading to it
            let mut via: HashMap<String, Vec<(Option<Iri>, Iri)>> = HashMap::new();
            for t in &triples {
                if let (Some(p), Some(v)) = (t.predicate_iri(), t.object.as_var()) {
                    via.entry(v.to_string()).or_default().push((class_of(&t.subject), p.clone()));
                }
            }
            for t in &triples {
                let Some(p) = t.predicate_iri() else { continue };
                if p.as_str() == RDF_TYPE {
                    if let Some(c) = t.object.as_iri() {
                        if !self.classes.contains(c) {
                            self.classes.push(c.clone());
                        }
                    }
                    continue;
                }
                let mut consts = Vec::new();
                collect_lits(&t.object.kind, &mut consts);
                let mut targets: Vec<(Option<Iri>, Iri)> = if is_builtin(p) {
                    t.subject.as_var().and_then(|v| via.get(v)).cloned().unwrap_or_default()
                } else {
                    vec![(class_of(&t.subject), p.clone())]
                };
                // literal standing for an entity: its key property gets the value
                let keys: Vec<(Option<Iri>, Iri)> = targets
                    .iter()
                    .filter_map(|(_, q)| self.comp.ontology.property(q).range)
                    .filter_map(|r| self.comp.ontology.key_property(&r).map(|k| (Some(r.clone()), k.clone())))
                    .collect();
                targets.extend(keys);
                for c in consts {
                    // numeric constants are thresholds: probe both sides
                    let values = match c {
                        Lit::Num(n) if is_builtin(p) => vec![Lit::Num(n - 1.0), Lit::Num(n), Lit::Num(n + 1.0)],
                        other => vec![other],
                    };
                    for v in values {
                        if let Lit::Num(n) = v {
                            self.numbers.push(n);
                        }
                        for (class, prop) in &targets {
                            self.pools.entry(prop.clone()).or_default().push(v.clone());
                            if let Some(c) = class {
                                self.scoped.entry((c.clone(), prop.clone())).or_default().push(v.clone());
                            }
                        }
                    }
                }
            }
        }
    }

    /// Constants for a field, preferring those seen on the owner's class.
    fn pool(&self, owner: &ModelAdt, f: &ModelProperty) -> &[Lit] {
        self.scoped
            .get(&(owner.term.clone(), f.term.clone()))
            .or_else(|| self.pools.get(&f.term))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn generate(&self, rng: &mut impl Rng) -> Result<Fixture> {
        let mut last = None;
        for _ in 0..ATTEMPTS {
            let fx = self.draw(rng);
            match self.admissible(&fx) {
                Ok(true) => return Ok(fx),
                Ok(false) => {}
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::new(ErrorCode::Runtime, "no admissible fixture found")))
    }

    /// Rejects fixtures whose inference closure violates a single-valued field.
    fn admissible(&self, fx: &Fixture) -> Result<bool> {
        let model = &self.comp.program.model;
        let data = fixture_triples(model, &ModelType::Adt(self.entry.clone()), fx)?;
        let rules: Vec<_> = self.comp.graphs.iter().map(|g| g.rule.clone()).collect();
        let inf = naive_rule_eval(&rules, &self.comp.ontology, &data)?;
        let single: HashSet<&str> = model
            .adts
            .iter()
            .flat_map(|a| a.fields.iter())
            .filter(|f| f.max == Max::One && f.inverse_of.is_none())
            .map(|f| f.term.as_str())
            .collect();
        let mut values: HashMap<(&Node, &Node), HashSet<&Node>> = HashMap::new();
        for (s, p, o) in data.iter().chain(inf.inferred.iter()) {
            values.entry((s, p)).or_default().insert(o);
        }
        for (s, p, _) in &inf.inferred {
            if let Node::Iri(pi) = p {
                if single.contains(pi.as_str()) && values[&(s, p)].len() > 1 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn draw(&self, rng: &mut impl Rng) -> Fixture {
        let bias = if rng.gen_bool(0.5) { 0.97 } else { rng.gen_range(0.5..0.9) };
        let mut d = Draw { rng, next_id: 0, entities: Vec::new(), bias };
        let request = self.entity(&mut d, &self.entry, &self.entry, None, 0, true);
        let mut world: Vec<(Iri, Json)> = Vec::new();
        for site in &self.sites {
            let n = if d.rng.gen_bool(d.bias) { d.rng.gen_range(1..=MAX_RESULTS) } else { 0 };
            for _ in 0..n {
                let mut e = self.entity(&mut d, &site.resource, &site.resource, None, 1, false);
                self.link(&mut d, &mut e, site);
                world.push((site.resource.clone(), e));
            }
        }
        let mut remote: Vec<RemoteEntry> = Vec::new();
        for site in &self.sites {
            let Some(adt) = self.comp.program.model.adt(&site.resource) else { continue };
            for (ty, e) in world.iter().filter(|(t, _)| *t == site.resource) {
                let mut params = IndexMap::new();
                for p in &site.select {
                    let Some(f) = adt.fields.iter().find(|f| f.term == p.property) else { continue };
                    if let Some(v) = e.get(&f.name) {
                        params.insert(p.name.clone(), json!(render_json(v)));
                    }
                }
                let ty = ty.local_name().to_string();
                match remote.iter_mut().find(|r| r.resource_type == ty && r.params == params) {
                    Some(r) => r.results.push(e.clone()),
                    None => remote.push(RemoteEntry { resource_type: ty, params, results: vec![e.clone()] }),
                }
            }
        }
        Fixture { request, remote }
    }

    /// Sets a remote result's parameter fields so the contract's request can find it.
    fn link(&self, d: &mut Draw<impl Rng>, e: &mut Json, site: &Site) {
        let Some(adt) = self.comp.program.model.adt(&site.resource) else { return };
        for p in &site.select {
            let Some(f) = adt.fields.iter().find(|f| f.term == p.property) else { continue };
            let value = match &p.value {
                crate::ir::Operand::Literal { value } => {
                    let lit = match value {
                        crate::ir::LiteralValue::String(s) => Lit::Str(s.clone()),
                        crate::ir::LiteralValue::Integer(i) => Lit::Num(*i as f64),
                        crate::ir::LiteralValue::Decimal(x) => Lit::Num(x.parse().unwrap_or(0.0)),
                        crate::ir::LiteralValue::Iri(i) => Lit::Iri(i.as_str().to_string()),
                        crate::ir::LiteralValue::List(_) => continue,
                    };
                    if d.rng.gen_bool(d.bias) {
                        lit.json()
                    } else {
                        self.other_literal(d, f)
                    }
                }
                _ => {
                    let range = f.value_type.adt();
                    let candidates: Vec<&String> =
                        d.entities.iter().filter(|(_, c)| range.is_none_or(|r| r == c)).map(|(id, _)| id).collect();
                    match candidates.choose(d.rng) {
                        Some(id) if d.rng.gen_bool(d.bias) => json!({ "@id": id }),
                        _ => json!({ "@id": OTHER_IRI }),
                    }
                }
            };
            e[&f.name] = value;
        }
    }

    fn skip_field(&self, f: &ModelProperty, parent: Option<&ModelProperty>, in_request: bool, depth: usize) -> bool {
        if self.inferred.contains(&f.term) {
            return true;
        }
        if let Some(p) = parent {
            if f.inverse_of.as_ref() == Some(&p.term) || p.inverse_of.as_ref() == Some(&f.term) {
                return true;
            }
        }
        if let Some(a) = f.value_type.adt() {
            if in_request && self.remote_types.contains(a) {
                return true;
            }
            if depth >= MAX_DEPTH && self.comp.program.model.adt(a).is_some_and(|x| !x.fields.is_empty()) {
                return true;
            }
        }
        false
    }

    fn entity(
        &self,
        d: &mut Draw<impl Rng>,
        adt_term: &Iri,
        class: &Iri,
        via: Option<&ModelProperty>,
        depth: usize,
        in_request: bool,
    ) -> Json {
        let id = d.id();
        if in_request {
            d.entities.push((id.clone(), adt_term.clone()));
        }
        let mut obj = Map::new();
        obj.insert("@type".into(), json!(class.as_str()));
        obj.insert("@id".into(), json!(id));
        let Some(adt) = self.comp.program.model.adt(adt_term).cloned() else { return Json::Object(obj) };
        for f in &adt.fields {
            if self.skip_field(f, via, in_request, depth) {
                continue;
            }
            let remote_root = depth == 1 && !in_request && self.sites.iter().any(|s| {
                s.resource == adt.term && s.select.iter().any(|p| p.property == f.term)
            });
            if remote_root {
                continue;
            }
            match f.max {
                Max::One => {
                    if d.rng.gen_bool(d.bias) {
                        let v = self.value(d, &adt, f, depth, in_request, &mut HashSet::new());
                        obj.insert(f.name.clone(), v);
                    }
                }
                Max::Unbounded => {
                    let n = if d.rng.gen_bool(d.bias) { d.rng.gen_range(1..=MAX_ITEMS) } else { 0 };
                    let mut used = HashSet::new();
                    let vals: Vec<Json> =
                        (0..n).map(|_| self.value(d, &adt, f, depth, in_request, &mut used)).collect();
                    obj.insert(f.name.clone(), Json::Array(vals));
                }
            }
        }
        Json::Object(obj)
    }

    fn value(
        &self,
        d: &mut Draw<impl Rng>,
        owner: &ModelAdt,
        f: &ModelProperty,
        depth: usize,
        in_request: bool,
        used_keys: &mut HashSet<Iri>,
    ) -> Json {
        match &f.value_type {
            ModelType::Datatype(_) => {
                match self.pool(owner, f).choose(d.rng) {
                    Some(l) if d.rng.gen_bool(d.bias) => l.json(),
                    _ => self.other_literal(d, f),
                }
            }
            ModelType::Adt(a) => {
                let target = self.comp.program.model.adt(a);
                if target.is_none_or(|t| t.fields.is_empty()) {
                    let pool: Vec<&Lit> = self.pool(owner, f).iter().filter(|l| matches!(l, Lit::Iri(_))).collect();
                    return match pool.choose(d.rng) {
                        Some(l) if d.rng.gen_bool(d.bias) => json!({ "@id": l.json() }),
                        _ => json!({ "@id": OTHER_IRI }),
                    };
                }
                let class = if f.use_dictionary {
                    let mut keys: Vec<Iri> = self.classes.clone();
                    keys.push(Iri::new(format!("{DATA_NS}OtherKind")));
                    keys.retain(|k| !used_keys.contains(k));
                    match keys.choose(d.rng) {
                        Some(k) => k.clone(),
                        None => Iri::new(format!("{DATA_NS}Kind{}", used_keys.len())),
                    }
                } else if f.max == Max::Unbounded && !self.classes.is_empty() && d.rng.gen_bool(0.2) {
                    self.classes.choose(d.rng).unwrap().clone()
                } else {
                    a.clone()
                };
                used_keys.insert(class.clone());
                self.entity(d, a, &class, Some(f), depth + 1, in_request)
            }
        }
    }

    fn other_literal(&self, d: &mut Draw<impl Rng>, f: &ModelProperty) -> Json {
        match &f.value_type {
            ModelType::Datatype(_) if f.value_type.is_numeric() => {
                let n = *self.numbers.choose(d.rng).unwrap();
                if d.rng.gen_bool(0.5) {
                    json!(n)
                } else {
                    json!(d.rng.gen_range(0..100))
                }
            }
            ModelType::Datatype(dt) if dt.local_name() == "anyURI" => json!(OTHER_IRI),
            ModelType::Datatype(_) => json!("other"),
            ModelType::Adt(_) => json!({ "@id": OTHER_IRI }),
        }
    }
}

fn is_builtin(p: &Iri) -> bool {
    p.as_str().starts_with("http://www.w3.org/2000/10/swap/")
}

fn collect_lits(t: &TermKind, out: &mut Vec<Lit>) {
    match t {
        TermKind::Literal(Literal::String(s)) => out.push(Lit::Str(s.clone())),
        TermKind::Literal(l) => out.push(Lit::Num(l.as_f64().unwrap_or(0.0))),
        TermKind::Iri(i) => out.push(Lit::Iri(i.as_str().to_string())),
        TermKind::List(items) => items.iter().for_each(|i| collect_lits(&i.kind, out)),
        _ => {}
    }
}

pub fn generate_fixture(comp: &Compilation, seed: u64) -> Result<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FixtureGenerator::new(comp)?.generate(&mut rng)
}
