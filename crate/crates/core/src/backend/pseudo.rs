//! Readable pseudocode rendering of bridge IR functions.

use std::fmt::Write;

use crate::ir::*;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PseudoOptions {
    pub show_events: bool,
    /// Print the requested resource type as a third RemoteRequest argument.
    pub show_request_types: bool,
}

impl PseudoOptions {
    pub fn full() -> Self {
        PseudoOptions { show_events: true, show_request_types: true }
    }
}

pub fn emit_pseudocode(program: &BridgeProgram, opts: PseudoOptions) -> String {
    let mut out = String::new();
    for (i, f) in program.functions.iter().enumerate() {
        if program.functions.len() > 1 {
            if i > 0 {
                out.push('\n');
            }
            let params: Vec<&str> = f.params.iter().map(|p| p.name.as_str()).collect();
            writeln!(out, "function {}({}):", f.name, params.join(", ")).unwrap();
        }
        for s in &f.preamble.statements {
            statement(&mut out, s, 0, opts);
        }
        for s in &f.logic {
            statement(&mut out, s, 0, opts);
        }
    }
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn statement(out: &mut String, s: &Statement, depth: usize, opts: PseudoOptions) {
    match s {
        Statement::IfThen { condition: c, then } => {
            indent(out, depth);
            writeln!(out, "if {} then", condition(c)).unwrap();
            for s in &then.statements {
                statement(out, s, depth + 1, opts);
            }
        }
        Statement::Block(b) => {
            for s in &b.statements {
                statement(out, s, depth, opts);
            }
        }
        Statement::Assignment { target, value } => {
            indent(out, depth);
            writeln!(out, "{} = {}", operand(target), operand(value)).unwrap();
        }
        Statement::Iteration { start, loop_var, body } => {
            indent(out, depth);
            writeln!(out, "for each {} as {loop_var} do", operand(start)).unwrap();
            statement(out, body, depth + 1, opts);
        }
        Statement::RemoteRequest { location, resource_type, select, result, .. } => {
            indent(out, depth);
            let params: Vec<String> = select.iter().map(|p| format!("{}={}", p.name, operand(&p.value))).collect();
            let ty = if opts.show_request_types { format!(", {}", resource_type.local_name()) } else { String::new() };
            writeln!(out, "{result} = RemoteRequest(\"{}\"{ty}, {{ {} }})", host(location.as_str()), params.join(", "))
                .unwrap();
        }
        Statement::EmitEvent { name, payload } => {
            if opts.show_events {
                indent(out, depth);
                writeln!(out, "emit {name}({})", operand(payload)).unwrap();
            }
        }
    }
}

/// Location without scheme or trailing slash, e.g. `myfhir.ca`.
pub fn host(location: &str) -> &str {
    let s = location.split_once("://").map_or(location, |(_, rest)| rest);
    s.trim_end_matches('/')
}

pub fn condition(c: &Condition) -> String {
    match c {
        Condition::Comparison { left, cmp: Cmp::Exists, .. } => format!("{} exists", operand(left)),
        Condition::Comparison { left, cmp, right } => {
            format!("{} {} {}", operand(left), cmp.symbol(), right.as_ref().map(operand).unwrap_or_default())
        }
        Condition::CondSet { set, members } => {
            let sep = match set {
                SetKind::And => " and ",
                SetKind::Or => " or ",
            };
            let parts: Vec<String> = members
                .iter()
                .map(|m| match m {
                    Condition::CondSet { set: inner, .. } if inner != set => format!("({})", condition(m)),
                    _ => condition(m),
                })
                .collect();
            parts.join(sep)
        }
        Condition::Qualified { qualifier, start, loop_var, inner } => {
            let q = match qualifier {
                Qualifier::Existential => "some",
                Qualifier::Universal => "all",
            };
            format!("for {q} {loop_var} in {} holds that {}", operand(start), condition(inner))
        }
    }
}

pub fn operand(o: &Operand) -> String {
    match o {
        Operand::Literal { value } => value.to_string(),
        Operand::Variable { name } => name.clone(),
        Operand::PropertyPath { start, steps } => {
            let mut s = match start.as_ref() {
                Operand::Variable { .. } | Operand::PropertyPath { .. } => operand(start),
                other => format!("({})", operand(other)),
            };
            for step in steps {
                s.push('.');
                s.push_str(&step.name);
                if let Some(k) = &step.key {
                    write!(s, "[{k}]").unwrap();
                }
            }
            s
        }
        Operand::CreateAdt { adt, arguments } => {
            let args: Vec<String> = arguments
                .statements
                .iter()
                .map(|s| match s {
                    Statement::Assignment { target, value } => {
                        let name = target.steps().last().map_or_else(|| operand(target), |st| st.name.clone());
                        format!("{name}: {}", operand(value))
                    }
                    other => format!("{other:?}"),
                })
                .collect();
            format!("{}({})", adt.local_name(), args.join(", "))
        }
        Operand::Operation { operator, operands } => {
            let parts: Vec<String> = operands
                .iter()
                .map(|x| match x {
                    Operand::Operation { .. } => format!("({})", operand(x)),
                    _ => operand(x),
                })
                .collect();
            parts.join(&format!(" {} ", operator.symbol()))
        }
    }
}
