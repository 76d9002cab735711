//! Deterministic execution of a bridge program against a fixture, with a FIFO queue
//! standing in for the client, contract and oracle messages.

use std::collections::{HashMap, VecDeque};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::fixture::{Fixture, Loader};
use super::value::{Payload, Store, Value};
use crate::error::{Error, ErrorCode, Result};
use crate::ir::*;
use crate::logic::ENTRY_FUNCTION;
use crate::n3::{Iri, RDF_TYPE};

const MAX_MESSAGES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "entry")]
pub enum TranscriptEntry {
    FunctionEntered { name: String },
    RemoteRequested { resource_type: String, params: IndexMap<String, String>, url: String },
    CallbackInvoked { name: String, count: usize },
    EventEmitted { name: String, payload: Payload },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn to_json_lines(&self) -> String {
        self.entries.iter().map(|e| serde_json::to_string(e).expect("serializable") + "\n").collect()
    }

    pub fn events(&self) -> Vec<(String, Payload)> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                TranscriptEntry::EventEmitted { name, payload } => Some((name.clone(), payload.clone())),
                _ => None,
            })
            .collect()
    }

    /// Entry kinds with function/type names, e.g. `RemoteRequested(Claim)`.
    pub fn shape(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| match e {
                TranscriptEntry::FunctionEntered { name } => format!("FunctionEntered({name})"),
                TranscriptEntry::RemoteRequested { resource_type, .. } => format!("RemoteRequested({resource_type})"),
                TranscriptEntry::CallbackInvoked { name, .. } => format!("CallbackInvoked({name})"),
                TranscriptEntry::EventEmitted { name, .. } => format!("EventEmitted({name})"),
            })
            .collect()
    }
}

enum Msg {
    Call,
    Oracle { site: usize, key: Vec<(String, String)> },
    Callback { site: usize, results: Vec<Value> },
}

enum Flow {
    Done,
    Suspend { callback: u32, key: Vec<(String, String)> },
}

type Env = HashMap<String, Value>;

pub fn execute_contract(program: &BridgeProgram, fixture: &Fixture) -> Result<Transcript> {
    let f = program
        .functions
        .iter()
        .find(|f| f.name == ENTRY_FUNCTION)
        .or(program.functions.first())
        .ok_or_else(|| Error::new(ErrorCode::Runtime, "program has no functions"))?;
    let param = f.params.first().ok_or_else(|| Error::new(ErrorCode::Runtime, "entry function has no parameter"))?;
    let sites = request_sites(f)?;
    let mut store = Store::default();
    let root = Loader::new(&program.model, &mut store).load(&fixture.request, &param.ty, "request")?;
    let mut m = Machine { model: &program.model, store, transcript: Transcript::default() };

    let mut queue = VecDeque::from([Msg::Call]);
    let mut handled = 0;
    while let Some(msg) = queue.pop_front() {
        handled += 1;
        if handled > MAX_MESSAGES {
            return Err(Error::new(ErrorCode::Runtime, "message limit exceeded"));
        }
        let flow = match msg {
            Msg::Call => {
                m.transcript.entries.push(TranscriptEntry::FunctionEntered { name: f.name.clone() });
                let mut env = Env::from([(param.name.clone(), root.clone())]);
                m.block(&f.preamble.statements, &mut env)?;
                m.block(&f.logic, &mut env)?
            }
            Msg::Oracle { site, key } => {
                let s = &sites[site];
                let mut results = Vec::new();
                let ty = ModelType::Adt(s.resource_type.clone());
                for (i, r) in fixture.lookup(&s.resource_type, &key).into_iter().enumerate() {
                    let at = format!("remote {}[{i}]", s.resource_type.local_name());
                    results.push(Loader::new(&program.model, &mut m.store).load(r, &ty, &at)?);
                }
                queue.push_back(Msg::Callback { site, results });
                continue;
            }
            Msg::Callback { site, results } => {
                let s = &sites[site];
                m.transcript
                    .entries
                    .push(TranscriptEntry::CallbackInvoked { name: format!("callback{}", s.callback), count: results.len() });
                let mut env = Env::from([(param.name.clone(), root.clone())]);
                m.block(&f.preamble.statements, &mut env)?;
                for r in results {
                    let mut inner = env.clone();
                    inner.insert(s.result.clone(), r);
                    if let Flow::Suspend { .. } = m.block(&s.per_result, &mut inner)? {
                        return Err(Error::new(ErrorCode::Runtime, "remote request inside a per-result segment"));
                    }
                }
                m.block(&s.rest, &mut env)?
            }
        };
        if let Flow::Suspend { callback, key } = flow {
            let site = sites
                .iter()
                .position(|s| s.callback == callback)
                .ok_or_else(|| Error::new(ErrorCode::Runtime, format!("no callback {callback}")))?;
            let s = &sites[site];
            m.transcript.entries.push(TranscriptEntry::RemoteRequested {
                resource_type: s.resource_type.local_name().to_string(),
                params: key.iter().cloned().collect(),
                url: search_url(&s.location, &s.resource_type, &key)?,
            });
            queue.push_back(Msg::Oracle { site, key });
        }
    }
    Ok(m.transcript)
}

struct Machine<'a> {
    model: &'a Model,
    store: Store,
    transcript: Transcript,
}

fn deref_error(steps: &[Step], i: usize) -> Error {
    let prefix: Vec<&str> = steps[..i].iter().map(|s| s.name.as_str()).collect();
    Error::new(
        ErrorCode::UnguardedDeref,
        format!("dereferencing absent value {} (reading {})", prefix.join("."), steps[i].name),
    )
}

fn literal(v: &LiteralValue) -> Vec<Value> {
    match v {
        LiteralValue::String(s) => vec![Value::Str(s.clone())],
        LiteralValue::Integer(i) => vec![Value::Num(*i as f64)],
        LiteralValue::Decimal(d) => d.parse().map(Value::Num).into_iter().collect(),
        LiteralValue::Iri(i) => vec![Value::Iri(i.clone())],
        LiteralValue::List(items) => items.iter().flat_map(literal).collect(),
    }
}

impl Machine<'_> {
    fn block(&mut self, stmts: &[Statement], env: &mut Env) -> Result<Flow> {
        for s in stmts {
            if let Flow::Suspend { callback, key } = self.statement(s, env)? {
                return Ok(Flow::Suspend { callback, key });
            }
        }
        Ok(Flow::Done)
    }

    fn statement(&mut self, s: &Statement, env: &mut Env) -> Result<Flow> {
        match s {
            Statement::IfThen { condition, then } => {
                if self.condition(condition, env)? {
                    return self.block(&then.statements, &mut env.clone());
                }
            }
            Statement::Block(b) => return self.block(&b.statements, &mut env.clone()),
            Statement::Assignment { target, value } => {
                let Some(v) = self.single(value, env)? else { return Ok(Flow::Done) };
                self.assign(target, v, env)?;
            }
            Statement::Iteration { start, loop_var, body } => {
                for v in self.many(start, env)? {
                    let mut inner = env.clone();
                    inner.insert(loop_var.clone(), v);
                    if let Flow::Suspend { callback, key } = self.statement(body, &mut inner)? {
                        return Ok(Flow::Suspend { callback, key });
                    }
                }
            }
            Statement::RemoteRequest { select, callback, .. } => {
                let mut key = Vec::new();
                for p in select {
                    let v = self.single(&p.value, env)?.ok_or_else(|| {
                        Error::new(ErrorCode::UnguardedDeref, format!("request parameter {} is absent", p.name))
                    })?;
                    key.push((p.name.clone(), self.store.render(&v)));
                }
                key.sort();
                return Ok(Flow::Suspend { callback: *callback, key });
            }
            Statement::EmitEvent { name, payload } => {
                if let Some(v) = self.single(payload, env)? {
                    let payload = self.store.payload(&v);
                    self.transcript.entries.push(TranscriptEntry::EventEmitted { name: name.clone(), payload });
                }
            }
        }
        Ok(Flow::Done)
    }

    fn assign(&mut self, target: &Operand, v: Value, env: &mut Env) -> Result<()> {
        match target {
            Operand::Variable { name } => {
                env.insert(name.clone(), v);
            }
            Operand::PropertyPath { steps, .. } => {
                let parent = target.parent().expect("path has a parent");
                let last = steps.last().expect("non-empty path");
                let owner = self
                    .single(&parent, env)?
                    .and_then(|p| self.store.resolve(&p))
                    .ok_or_else(|| deref_error(steps, steps.len() - 1))?;
                let single = self.model.step_field(&last.adt, &last.field).is_none_or(|f| f.max == Max::One);
                let slot = self.store.get_mut(owner).fields.entry(last.field.clone()).or_default();
                if single {
                    *slot = vec![v];
                } else if !slot.contains(&v) {
                    slot.push(v);
                }
            }
            other => return Err(Error::new(ErrorCode::Runtime, format!("cannot assign to {other:?}"))),
        }
        Ok(())
    }

    fn single(&mut self, o: &Operand, env: &Env) -> Result<Option<Value>> {
        let mut vs = self.many(o, env)?;
        match vs.len() {
            0 => Ok(None),
            1 => Ok(vs.pop()),
            n => Err(Error::new(ErrorCode::Runtime, format!("expected one value, found {n}"))),
        }
    }

    fn many(&mut self, o: &Operand, env: &Env) -> Result<Vec<Value>> {
        match o {
            Operand::Literal { value } => Ok(literal(value)),
            Operand::Variable { name } => Ok(env.get(name).cloned().into_iter().collect()),
            Operand::PropertyPath { start, steps } => {
                let mut cur = self.many(start, env)?;
                for (i, step) in steps.iter().enumerate() {
                    if cur.is_empty() {
                        if step.null_safe || (i > 0 && steps[i - 1].key.is_some()) {
                            return Ok(Vec::new());
                        }
                        return Err(deref_error(steps, i));
                    }
                    if cur.len() > 1 {
                        return Err(Error::new(ErrorCode::Runtime, format!("multi-valued receiver for {}", step.name)));
                    }
                    cur = self.step(&cur[0], step)?;
                }
                Ok(cur)
            }
            Operand::CreateAdt { adt, arguments } => {
                let e = self.store.create(adt.clone());
                let mut inner = env.clone();
                inner.insert("self".into(), Value::Entity(e));
                self.block(&arguments.statements, &mut inner)?;
                Ok(vec![Value::Entity(e)])
            }
            Operand::Operation { operator, operands } => {
                let mut nums = Vec::new();
                for x in operands {
                    match self.single(x, env)? {
                        Some(Value::Num(n)) => nums.push(n),
                        _ => return Ok(Vec::new()),
                    }
                }
                Ok(operate(*operator, &nums).map(Value::Num).into_iter().collect())
            }
        }
    }

    fn step(&self, v: &Value, step: &Step) -> Result<Vec<Value>> {
        let Some(e) = self.store.resolve(v) else {
            return match v {
                Value::Iri(_) => Ok(Vec::new()),
                other => Err(Error::new(ErrorCode::Runtime, format!("reading {} of literal {other:?}", step.name))),
            };
        };
        if step.field.as_str() == RDF_TYPE {
            return Ok(vec![Value::Iri(self.store.get(e).class.clone())]);
        }
        let mut vals = self.store.get(e).fields.get(&step.field).cloned().unwrap_or_default();
        if let Some(inv) = self.model.step_field(&step.adt, &step.field).and_then(|f| f.inverse_of) {
            let me = self.store.get(e).id.clone();
            for (x, ent) in self.store.entities.iter().enumerate() {
                let points = ent.fields.get(&inv).is_some_and(|vs| vs.iter().any(|w| self.store.identity(w) == Some(&me)));
                if points && !vals.iter().any(|w| self.store.resolve(w) == Some(x)) {
                    vals.push(Value::Entity(x));
                }
            }
        }
        if let Some(key) = &step.key {
            let key = match key {
                LiteralValue::Iri(i) => i.clone(),
                other => Iri::new(other.to_string().trim_matches('\'')),
            };
            let hits: Vec<Value> = vals
                .into_iter()
                .filter(|w| {
                    self.store.resolve(w).is_some_and(|x| {
                        let c = &self.store.get(x).class;
                        *c == key || c.local_name() == key.as_str()
                    })
                })
                .collect();
            if hits.len() > 1 {
                return Err(Error::new(
                    ErrorCode::DuplicateDictionaryKey,
                    format!("{} holds {} entries keyed {}", step.name, hits.len(), key.local_name()),
                ));
            }
            return Ok(hits);
        }
        Ok(vals)
    }

    fn condition(&mut self, c: &Condition, env: &Env) -> Result<bool> {
        match c {
            Condition::Comparison { left, cmp: Cmp::Exists, .. } => Ok(!self.many(left, env)?.is_empty()),
            Condition::Comparison { left, cmp, right } => {
                let Some(l) = self.single(left, env)? else { return Ok(false) };
                let r = match right {
                    Some(r) => self.many(r, env)?,
                    None => return Ok(false),
                };
                Ok(match cmp {
                    Cmp::In => r.iter().any(|x| self.store.equal(&l, x)),
                    Cmp::Equal => r.len() == 1 && self.store.equal(&l, &r[0]),
                    _ => match (&l, r.as_slice()) {
                        (Value::Num(a), [Value::Num(b)]) => compare(*cmp, *a, *b),
                        _ => false,
                    },
                })
            }
            Condition::CondSet { set: SetKind::And, members } => {
                for m in members {
                    if !self.condition(m, env)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Condition::CondSet { set: SetKind::Or, members } => {
                for m in members {
                    if self.condition(m, env)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Condition::Qualified { qualifier, start, loop_var, inner } => {
                let universal = *qualifier == Qualifier::Universal;
                for v in self.many(start, env)? {
                    let mut e = env.clone();
                    e.insert(loop_var.clone(), v);
                    if self.condition(inner, &e)? != universal {
                        return Ok(!universal);
                    }
                }
                Ok(universal)
            }
        }
    }
}

pub(crate) fn compare(cmp: Cmp, a: f64, b: f64) -> bool {
    match cmp {
        Cmp::Lt => a < b,
        Cmp::Gt => a > b,
        Cmp::Le => a <= b,
        Cmp::Ge => a >= b,
        Cmp::Equal => a == b,
        _ => false,
    }
}

/// Arithmetic shared with the naive evaluator; division by zero yields no value.
pub(crate) fn operate(op: Operator, xs: &[f64]) -> Option<f64> {
    match op {
        Operator::Sum => Some(xs.iter().sum()),
        Operator::Product => Some(xs.iter().product()),
        Operator::Quotient => match xs {
            [a, b] if *b != 0.0 => Some(a / b),
            _ => None,
        },
        Operator::Exponent => match xs {
            [a, b] => Some(a.powf(*b)).filter(|x| x.is_finite()),
            _ => None,
        },
    }
}
