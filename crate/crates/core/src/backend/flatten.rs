//! Merges nested ADTs that hold dictionary fields into their root ADT, since a struct
//! with a mapping member cannot be nested in another struct.

use std::collections::HashSet;

use serde::Serialize;

use crate::ir::*;
use crate::n3::Iri;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rewrite {
    pub root: Iri,
    /// Field chain `[outer, inner]` that is replaced.
    pub from: Vec<Iri>,
    /// Merged field of the root.
    pub to: Iri,
    pub name: String,
}

#[derive(Debug, Clone, Default)]
pub struct Flattened {
    pub program: BridgeProgram,
    pub rewrites: Vec<Rewrite>,
    pub warnings: Vec<String>,
}

fn has_dictionary(model: &Model, adt: &Iri, seen: &mut HashSet<Iri>) -> bool {
    if !seen.insert(adt.clone()) {
        return false;
    }
    let Some(a) = model.adt(adt) else { return false };
    a.fields.iter().any(|f| {
        f.use_dictionary
            || (f.max == Max::One && f.value_type.adt().is_some_and(|x| has_dictionary(model, x, seen)))
    })
}

pub fn flatten_mapping_structs(program: &BridgeProgram) -> Flattened {
    let mut out = Flattened { program: program.clone(), ..Default::default() };
    let roots: Vec<Iri> = program
        .functions
        .iter()
        .flat_map(|f| f.params.iter().filter_map(|p| p.ty.adt().cloned()))
        .collect();
    for root in roots {
        loop {
            let model = &out.program.model;
            let Some(r) = model.adt(&root) else { break };
            let candidate = r.fields.iter().find(|f| {
                f.max == Max::One
                    && f.value_type.adt().is_some_and(|x| *x != root && has_dictionary(model, x, &mut HashSet::new()))
            });
            let Some(f) = candidate.cloned() else { break };
            let inner = model.adt(f.value_type.adt().unwrap()).unwrap().clone();
            let r = out.program.model.adt_mut(&root).unwrap();
            r.fields.retain(|x| x.term != f.term);
            for g in &inner.fields {
                let mut merged = g.clone();
                if r.fields.iter().any(|x| x.term == g.term) {
                    merged.term = Iri(format!("{}~{}", g.term, inner.name));
                }
                if r.fields.iter().any(|x| x.name == merged.name) {
                    merged.name = format!("{}_{}", g.name, inner.name);
                }
                out.rewrites.push(Rewrite {
                    root: root.clone(),
                    from: vec![f.term.clone(), g.term.clone()],
                    to: merged.term.clone(),
                    name: merged.name.clone(),
                });
                r.fields.push(merged);
            }
            let rewrites: Vec<Rewrite> =
                out.rewrites.iter().filter(|w| w.root == root && w.from[0] == f.term).cloned().collect();
            let inner_term = inner.term.clone();
            for func in &mut out.program.functions {
                for s in func.preamble.statements.iter_mut().chain(func.logic.iter_mut()) {
                    statement(s, &root, &f.term, &inner_term, &rewrites, &mut out.warnings);
                }
            }
        }
    }
    out
}

struct Ctx<'a> {
    root: &'a Iri,
    field: &'a Iri,
    inner: &'a Iri,
    rewrites: &'a [Rewrite],
}

fn statement(s: &mut Statement, root: &Iri, field: &Iri, inner: &Iri, rw: &[Rewrite], warnings: &mut Vec<String>) {
    let cx = Ctx { root, field, inner, rewrites: rw };
    stmt(&cx, s, warnings);
}

fn stmt(cx: &Ctx, s: &mut Statement, w: &mut Vec<String>) {
    match s {
        Statement::IfThen { condition, then } => {
            cond(cx, condition, w);
            for s in &mut then.statements {
                stmt(cx, s, w);
            }
        }
        Statement::Block(b) => {
            for s in &mut b.statements {
                stmt(cx, s, w);
            }
        }
        Statement::Assignment { target, value } => {
            operand(cx, target, w);
            operand(cx, value, w);
        }
        Statement::Iteration { start, body, .. } => {
            operand(cx, start, w);
            stmt(cx, body, w);
        }
        Statement::RemoteRequest { select, .. } => {
            for p in select {
                operand(cx, &mut p.value, w);
            }
        }
        Statement::EmitEvent { payload, .. } => operand(cx, payload, w),
    }
}

fn ends_in_flattened(cx: &Ctx, o: &Operand) -> bool {
    o.steps().last().is_some_and(|s| &s.adt == cx.root && &s.field == cx.field)
}

fn cond(cx: &Ctx, c: &mut Condition, w: &mut Vec<String>) {
    match c {
        Condition::Comparison { left, cmp: Cmp::Exists, .. } if ends_in_flattened(cx, left) => {
            // the merged struct always exists once its fields live on the root
            *c = Condition::and(Vec::new());
        }
        Condition::Comparison { left, right, .. } => {
            operand(cx, left, w);
            if let Some(r) = right {
                operand(cx, r, w);
            }
        }
        Condition::CondSet { members, .. } => {
            for m in members.iter_mut() {
                cond(cx, m, w);
            }
            members.retain(|m| !matches!(m, Condition::CondSet { members, .. } if members.is_empty()));
        }
        Condition::Qualified { start, inner, .. } => {
            operand(cx, start, w);
            cond(cx, inner, w);
        }
    }
}

fn operand(cx: &Ctx, o: &mut Operand, w: &mut Vec<String>) {
    match o {
        Operand::PropertyPath { start, steps } => {
            operand(cx, start, w);
            let mut i = 0;
            while i < steps.len() {
                if &steps[i].adt == cx.root && &steps[i].field == cx.field {
                    match steps.get(i + 1) {
                        Some(next) if &next.adt == cx.inner => {
                            if let Some(rw) = cx.rewrites.iter().find(|r| r.from[1] == next.field) {
                                let merged = Step {
                                    adt: cx.root.clone(),
                                    field: rw.to.clone(),
                                    name: rw.name.clone(),
                                    key: next.key.clone(),
                                    null_safe: next.null_safe,
                                };
                                steps.splice(i..i + 2, [merged]);
                            }
                        }
                        _ => w.push(format!("path ends at flattened field {}", steps[i].name)),
                    }
                }
                i += 1;
            }
        }
        Operand::CreateAdt { arguments, .. } => {
            for s in &mut arguments.statements {
                stmt(cx, s, w);
            }
        }
        Operand::Operation { operands, .. } => {
            for x in operands {
                operand(cx, x, w);
            }
        }
        Operand::Literal { .. } | Operand::Variable { .. } => {}
    }
}
