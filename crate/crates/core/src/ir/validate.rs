use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::error::ErrorCode;
use crate::ir::*;

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub code: ErrorCode,
    pub at: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.at, self.message)
    }
}

/// Checks the structural and typing invariants of a program; empty iff valid.
pub fn validate(program: &BridgeProgram) -> Vec<Diagnostic> {
    let mut v = Validator { program, diags: Vec::new() };
    v.model();
    for (i, e) in program.events.iter().enumerate() {
        if let ModelType::Adt(a) = &e.payload {
            if program.model.adt(a).is_none() {
                v.diag(ErrorCode::Schema, format!("events[{i}]"), format!("payload ADT {a} is not in the model"));
            }
        }
    }
    let mut names = HashSet::new();
    for (fi, f) in program.functions.iter().enumerate() {
        let at = format!("functions[{fi}]");
        if !names.insert(f.name.clone()) {
            v.diag(ErrorCode::Schema, at.clone(), format!("duplicate function {}", f.name));
        }
        let mut env = Env::new();
        for p in &f.params {
            v.check_type_ref(&p.ty, &at);
            env.insert(p.name.clone(), p.ty.clone());
        }
        for (si, s) in f.preamble.statements.iter().enumerate() {
            let at = format!("{at}.preamble[{si}]");
            match s {
                Statement::Assignment { target: Operand::Variable { name }, value: value @ Operand::Operation { .. } } => {
                    let ty = v.operand(value, &env, &at);
                    env.insert(name.clone(), ty.unwrap_or_else(decimal));
                }
                _ => v.diag(ErrorCode::Schema, at, "preamble may only assign operations to variables".into()),
            }
        }
        v.statements(&f.logic, &mut env.clone(), &format!("{at}.logic"), false);
    }
    v.diags
}

type Env = HashMap<String, ModelType>;

fn decimal() -> ModelType {
    ModelType::Datatype(Iri(format!("{XSD_NS}decimal")))
}

struct Validator<'a> {
    program: &'a BridgeProgram,
    diags: Vec<Diagnostic>,
}

impl Validator<'_> {
    fn diag(&mut self, code: ErrorCode, at: String, message: String) {
        self.diags.push(Diagnostic { code, at, message });
    }

    fn model(&mut self) {
        let mut terms = HashSet::new();
        for (ai, adt) in self.program.model.adts.iter().enumerate() {
            let at = format!("model.adts[{ai}]");
            if !terms.insert(&adt.term) {
                self.diag(ErrorCode::Schema, at.clone(), format!("duplicate ADT {}", adt.term));
            }
            let mut names = HashSet::new();
            for (fi, f) in adt.fields.iter().enumerate() {
                let at = format!("{at}.fields[{fi}]");
                if !names.insert(&f.name) || adt.fields.iter().filter(|g| g.term == f.term).count() > 1 {
                    self.diag(ErrorCode::Schema, at.clone(), format!("duplicate field {} in {}", f.name, adt.name));
                }
                if f.use_dictionary && (f.max != Max::Unbounded || f.dictionary_key.is_none()) {
                    self.diag(
                        ErrorCode::Schema,
                        at.clone(),
                        format!("dictionary field {} must be multi-valued with a key", f.name),
                    );
                }
                self.check_type_ref(&f.value_type, &at);
            }
        }
    }

    fn check_type_ref(&mut self, ty: &ModelType, at: &str) {
        if let ModelType::Adt(a) = ty {
            if self.program.model.adt(a).is_none() {
                self.diag(ErrorCode::Schema, at.to_string(), format!("ADT {a} is not in the model"));
            }
        }
    }

    fn statements(&mut self, stmts: &[Statement], env: &mut Env, at: &str, in_iteration: bool) {
        for (i, s) in stmts.iter().enumerate() {
            self.statement(s, env, &format!("{at}[{i}]"), in_iteration);
        }
    }

    fn statement(&mut self, s: &Statement, env: &mut Env, at: &str, in_iteration: bool) {
        match s {
            Statement::IfThen { condition, then } => {
                self.condition(condition, env, &format!("{at}.condition"));
                self.statements(&then.statements, &mut env.clone(), &format!("{at}.then"), in_iteration);
            }
            Statement::Block(b) => self.statements(&b.statements, &mut env.clone(), at, in_iteration),
            Statement::Assignment { target, value } => {
                let ty = self.operand(value, env, &format!("{at}.value"));
                match target {
                    Operand::Variable { name } => {
                        if let Some(ty) = ty {
                            env.insert(name.clone(), ty);
                        }
                    }
                    Operand::PropertyPath { .. } => {
                        self.operand(target, env, &format!("{at}.target"));
                    }
                    _ => self.diag(ErrorCode::Schema, at.to_string(), "assignment target must be a variable or path".into()),
                }
            }
            Statement::Iteration { start, loop_var, body } => {
                let mut inner = env.clone();
                if let Some(elem) = self.multi_valued_start(start, env, at) {
                    inner.insert(loop_var.clone(), elem);
                }
                self.statement(body, &mut inner, &format!("{at}.body"), true);
            }
            Statement::RemoteRequest { resource_type, select, result, .. } => {
                if in_iteration {
                    self.diag(ErrorCode::UnsupportedNesting, at.to_string(), "remote request inside an iteration".into());
                }
                if self.program.model.adt(resource_type).is_none() {
                    self.diag(ErrorCode::Schema, at.to_string(), format!("resource type {resource_type} is not in the model"));
                }
                for (pi, p) in select.iter().enumerate() {
                    self.operand(&p.value, env, &format!("{at}.select[{pi}]"));
                }
                env.insert(result.clone(), ModelType::Adt(resource_type.clone()));
            }
            Statement::EmitEvent { name, payload } => {
                if !self.program.events.iter().any(|e| &e.name == name) {
                    self.diag(ErrorCode::Schema, at.to_string(), format!("event {name} is not declared"));
                }
                self.operand(payload, env, &format!("{at}.payload"));
            }
        }
    }

    /// Element type of an iteration start; it must end in a non-dictionary multi-valued field.
    fn multi_valued_start(&mut self, start: &Operand, env: &Env, at: &str) -> Option<ModelType> {
        let ty = self.operand(start, env, &format!("{at}.start"))?;
        let last = start.steps().last();
        match last.and_then(|s| self.program.model.step_field(&s.adt, &s.field)) {
            Some(f) if f.max == Max::Unbounded && last.is_some_and(|s| s.key.is_none()) => Some(ty),
            _ => {
                self.diag(
                    ErrorCode::Schema,
                    format!("{at}.start"),
                    "iteration must start from a multi-valued property".into(),
                );
                None
            }
        }
    }

    fn condition(&mut self, c: &Condition, env: &Env, at: &str) {
        match c {
            Condition::Comparison { left, cmp, right } => {
                self.operand(left, env, &format!("{at}.left"));
                match (cmp, right) {
                    (Cmp::Exists, Some(_)) => {
                        self.diag(ErrorCode::Schema, at.to_string(), "exists comparison takes no right operand".into())
                    }
                    (Cmp::Exists, None) => {}
                    (_, None) => self.diag(ErrorCode::Schema, at.to_string(), "comparison lacks a right operand".into()),
                    (Cmp::In, Some(Operand::Literal { value: LiteralValue::List(_) })) => {}
                    (Cmp::In, Some(_)) => {
                        self.diag(ErrorCode::Schema, at.to_string(), "'in' requires a literal list".into())
                    }
                    (_, Some(r)) => {
                        self.operand(r, env, &format!("{at}.right"));
                    }
                }
            }
            Condition::CondSet { members, .. } => {
                if members.is_empty() {
                    self.diag(ErrorCode::Schema, at.to_string(), "empty condition set".into());
                }
                for (i, m) in members.iter().enumerate() {
                    self.condition(m, env, &format!("{at}.members[{i}]"));
                }
            }
            Condition::Qualified { start, loop_var, inner, .. } => {
                let mut env2 = env.clone();
                if let Some(elem) = self.multi_valued_start(start, env, at) {
                    env2.insert(loop_var.clone(), elem);
                }
                self.condition(inner, &env2, &format!("{at}.inner"));
            }
        }
    }

    fn operand(&mut self, op: &Operand, env: &Env, at: &str) -> Option<ModelType> {
        match op {
            Operand::Literal { value } => Some(ModelType::Datatype(Iri(format!(
                "{XSD_NS}{}",
                match value {
                    LiteralValue::String(_) => "string",
                    LiteralValue::Integer(_) => "integer",
                    LiteralValue::Decimal(_) => "decimal",
                    LiteralValue::Iri(_) => "anyURI",
                    LiteralValue::List(_) => return None,
                }
            )))),
            Operand::Variable { name } => match env.get(name) {
                Some(t) => Some(t.clone()),
                None => {
                    self.diag(ErrorCode::Unification, at.to_string(), format!("unbound variable {name}"));
                    None
                }
            },
            Operand::PropertyPath { start, steps } => {
                let mut ty = self.operand(start, env, at)?;
                for (i, s) in steps.iter().enumerate() {
                    let Some(adt) = ty.adt().cloned() else {
                        self.diag(ErrorCode::MissingField, at.to_string(), format!("step {} applied to a datatype value", s.name));
                        return None;
                    };
                    if adt != s.adt {
                        self.diag(
                            ErrorCode::MissingField,
                            at.to_string(),
                            format!("step {} expects {} but the path reaches {}", s.name, s.adt.local_name(), adt.local_name()),
                        );
                        return None;
                    }
                    let Some(field) = self.program.model.step_field(&adt, &s.field) else {
                        self.diag(
                            ErrorCode::MissingField,
                            at.to_string(),
                            format!("{} is not a field of {}", s.name, adt.local_name()),
                        );
                        return None;
                    };
                    if s.key.is_some() && !field.use_dictionary {
                        self.diag(ErrorCode::Schema, at.to_string(), format!("keyed access on non-dictionary field {}", s.name));
                    }
                    if field.max == Max::Unbounded && s.key.is_none() && i + 1 < steps.len() {
                        self.diag(
                            ErrorCode::Schema,
                            at.to_string(),
                            format!("path continues through multi-valued field {} without iteration", s.name),
                        );
                    }
                    ty = field.value_type.clone();
                }
                Some(ty)
            }
            Operand::CreateAdt { adt, arguments } => {
                if self.program.model.adt(adt).is_none() {
                    self.diag(ErrorCode::Schema, at.to_string(), format!("ADT {adt} is not in the model"));
                    return None;
                }
                let mut env2 = env.clone();
                env2.insert("self".into(), ModelType::Adt(adt.clone()));
                for (i, s) in arguments.statements.iter().enumerate() {
                    self.statement(s, &mut env2, &format!("{at}.arguments[{i}]"), false);
                }
                Some(ModelType::Adt(adt.clone()))
            }
            Operand::Operation { operands, .. } => {
                for (i, o) in operands.iter().enumerate() {
                    self.operand(o, env, &format!("{at}.operands[{i}]"));
                }
                Some(decimal())
            }
        }
    }
}
