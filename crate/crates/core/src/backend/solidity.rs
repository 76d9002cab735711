//! Solidity emission: structs per ADT, callback splitting at remote requests,
//! check functions for qualified conditions, and a manifest.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write;

use indexmap::IndexMap;
use serde::Serialize;

use crate::adt::{camel, mangle, Mangling};
use crate::backend::flatten::{flatten_mapping_structs, Rewrite};
use crate::error::{Error, ErrorCode, Result};
use crate::ir::*;
use crate::n3::{Iri, RDF_TYPE, XSD_NS};

/// EVM contract code size limit in bytes.
pub const MAX_CONTRACT_SIZE: usize = 24_576;
pub const PRAGMA: &str = "pragma solidity ^0.8.19;";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolidityOptions {
    pub contract_name: String,
}

impl Default for SolidityOptions {
    fn default() -> Self {
        SolidityOptions { contract_name: "Contract1".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub contract: String,
    pub size: usize,
    pub functions: Vec<String>,
    pub events: Vec<String>,
    pub mangling: Mangling,
    pub rewrites: Vec<Rewrite>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolidityOutput {
    pub source: String,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum SolTy {
    Str,
    Int,
    Bool,
    Enum(Iri),
    Struct(Iri),
    /// Identifier string standing in for a recursive struct reference.
    IdRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Ty {
    base: SolTy,
    array: bool,
}

struct CheckFn {
    name: String,
    elem: Ty,
    loop_var: String,
    inner: Condition,
    universal: bool,
    free: Vec<(String, Ty)>,
}

struct Emitter<'a> {
    program: &'a BridgeProgram,
    names: Mangling,
    enums: IndexMap<Iri, Vec<Iri>>,
    enum_names: HashMap<Iri, String>,
    back_edges: HashSet<(Iri, Iri)>,
    /// Root ADTs kept in contract storage because they hold mappings.
    storage_roots: HashSet<Iri>,
    checks: Vec<CheckFn>,
    loop_counter: usize,
    uses_to_string: bool,
    warnings: Vec<String>,
}

type Env = HashMap<String, Ty>;

pub fn emit_solidity(program: &BridgeProgram, opts: &SolidityOptions) -> Result<SolidityOutput> {
    let flat = flatten_mapping_structs(program);
    let program = &flat.program;
    let names = mangle(&program.model);
    let mut em = Emitter {
        program,
        names,
        enums: IndexMap::new(),
        enum_names: HashMap::new(),
        back_edges: HashSet::new(),
        storage_roots: HashSet::new(),
        checks: Vec::new(),
        loop_counter: 0,
        uses_to_string: false,
        warnings: flat.warnings.clone(),
    };
    em.find_enums();
    em.find_back_edges();
    for f in &program.functions {
        for p in &f.params {
            if let Some(a) = p.ty.adt() {
                if program.model.adt(a).is_some_and(|x| x.uses_dictionary_fields()) {
                    em.storage_roots.insert(a.clone());
                }
            }
        }
    }

    let mut functions_src = String::new();
    let mut function_names = Vec::new();
    for f in &program.functions {
        em.function(f, &mut functions_src, &mut function_names)?;
    }
    let mut checks_src = String::new();
    let mut i = 0;
    while i < em.checks.len() {
        let src = em.check_fn(i)?;
        checks_src.push_str(&src);
        function_names.push(em.checks[i].name.clone());
        i += 1;
    }

    let mut src = String::new();
    writeln!(src, "{PRAGMA}\n").unwrap();
    writeln!(src, "contract {} {{", opts.contract_name).unwrap();
    for (adt, values) in &em.enums {
        let members: Vec<String> =
            std::iter::once("Unknown".to_string()).chain(values.iter().map(|v| camel(v.local_name(), true))).collect();
        writeln!(src, "    enum {} {{ {} }}", em.enum_names[adt], members.join(", ")).unwrap();
    }
    if !em.enums.is_empty() {
        src.push('\n');
    }
    writeln!(src, "    struct Parameter {{\n        string name;\n        string value;\n    }}\n").unwrap();
    for adt in &program.model.adts {
        if em.enums.contains_key(&adt.term) {
            continue;
        }
        em.struct_def(adt, &mut src);
    }
    let root_field = match program.functions.first().and_then(|f| f.params.first()) {
        Some(p) => match p.ty.adt() {
            Some(a) if em.storage_roots.contains(a) => "string request;".to_string(),
            Some(a) => format!("{} request;", em.names.ty(a)),
            None => "string request;".to_string(),
        },
        None => "string request;".to_string(),
    };
    writeln!(
        src,
        "    struct RequestData {{\n        {root_field}\n        string resource;\n        Parameter[] parameters;\n        string callback;\n    }}\n"
    )
    .unwrap();
    let mut events = vec!["OracleRequest".to_string()];
    writeln!(src, "    event OracleRequest(RequestData data);").unwrap();
    for e in &program.events {
        let ty = em.sol_type(&Ty { base: em.base(&e.payload), array: false }, false);
        writeln!(src, "    event {}({ty} data);", e.name).unwrap();
        events.push(e.name.clone());
    }
    src.push('\n');
    for root in sorted(&em.storage_roots) {
        let ty = em.names.ty(&root).to_string();
        writeln!(src, "    mapping(string => {ty}) private {};\n", storage_var(&ty)).unwrap();
        em.setters(&root, &mut src, &mut function_names);
    }
    src.push_str(&functions_src);
    src.push_str(&checks_src);
    if em.uses_to_string {
        src.push_str(TO_STRING);
        function_names.push("toString".into());
    }
    // drop the blank line before the closing brace
    while src.ends_with("\n\n") {
        src.pop();
    }
    src.push_str("}\n");
    let size = src.len();
    if size > MAX_CONTRACT_SIZE {
        em.warnings.push(format!("contract source is {size} bytes, above the {MAX_CONTRACT_SIZE}-byte EVM contract size limit"));
    }
    Ok(SolidityOutput {
        manifest: Manifest {
            contract: opts.contract_name.clone(),
            size,
            functions: function_names,
            events,
            mangling: em.names.clone(),
            rewrites: flat.rewrites.clone(),
            warnings: em.warnings.clone(),
        },
        source: src,
    })
}

fn sorted(set: &HashSet<Iri>) -> Vec<Iri> {
    let mut v: Vec<Iri> = set.iter().cloned().collect();
    v.sort();
    v
}

fn storage_var(ty: &str) -> String {
    format!("{}Store", camel(ty, false))
}

fn plural(name: &str) -> String {
    if name.ends_with('s') || name.ends_with('x') || name.ends_with("ch") || name.ends_with("sh") {
        format!("{name}es")
    } else if name.ends_with('y') && !name.ends_with("ey") {
        format!("{}ies", &name[..name.len() - 1])
    } else {
        format!("{name}s")
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

const TO_STRING: &str = "    function toString(int256 value) private pure returns (string memory) {
        if (value == 0) {
            return \"0\";
        }
        bool negative = value < 0;
        uint256 v = negative ? uint256(-value) : uint256(value);
        bytes memory buf;
        for (uint256 n = 0; n < 78; n++) {
            if (v == 0) {
                break;
            }
            buf = abi.encodePacked(bytes1(uint8(48 + (v % 10))), buf);
            v /= 10;
        }
        return string(negative ? abi.encodePacked(\"-\", buf) : buf);
    }

";

fn strip_prefix_ns(dt: &Iri) -> &str {
    dt.as_str().strip_prefix(XSD_NS).unwrap_or("")
}

impl Emitter<'_> {
    fn base(&self, t: &ModelType) -> SolTy {
        match t {
            ModelType::Adt(a) if self.enums.contains_key(a) => SolTy::Enum(a.clone()),
            ModelType::Adt(a) => SolTy::Struct(a.clone()),
            ModelType::Datatype(d) => match strip_prefix_ns(d) {
                "integer" | "int" | "long" | "short" | "decimal" | "double" | "float" | "nonNegativeInteger"
                | "positiveInteger" => SolTy::Int,
                "boolean" => SolTy::Bool,
                _ => SolTy::Str,
            },
        }
    }

    fn sol_type(&self, t: &Ty, location: bool) -> String {
        let mut s = match &t.base {
            SolTy::Str | SolTy::IdRef => "string".to_string(),
            SolTy::Int => "int256".to_string(),
            SolTy::Bool => "bool".to_string(),
            SolTy::Enum(a) => self.enum_names[a].clone(),
            SolTy::Struct(a) => self.names.ty(a).to_string(),
        };
        if t.array {
            s.push_str("[]");
        }
        let reference = t.array || matches!(t.base, SolTy::Str | SolTy::IdRef | SolTy::Struct(_));
        if location && reference {
            let storage = matches!(&t.base, SolTy::Struct(a) if self.storage_roots.contains(a)) && !t.array;
            s.push_str(if storage { " storage" } else { " memory" });
        }
        s
    }

    /// ADTs without fields compared only against IRIs become enums.
    fn find_enums(&mut self) {
        let mut values: IndexMap<Iri, BTreeSet<Iri>> = IndexMap::new();
        let mut disqualified: HashSet<Iri> = HashSet::new();
        let model = &self.program.model;
        let mut visit = |c: &Condition| {
            let mut stack = vec![c];
            while let Some(c) = stack.pop() {
                match c {
                    Condition::Comparison { left, cmp, right } => {
                        let Some(last) = left.steps().last() else { continue };
                        let Some(f) = model.step_field(&last.adt, &last.field) else { continue };
                        let Some(a) = f.value_type.adt() else { continue };
                        let iris: Option<Vec<Iri>> = match right {
                            Some(Operand::Literal { value: LiteralValue::Iri(i) }) => Some(vec![i.clone()]),
                            Some(Operand::Literal { value: LiteralValue::List(items) }) => items
                                .iter()
                                .map(|x| match x {
                                    LiteralValue::Iri(i) => Some(i.clone()),
                                    _ => None,
                                })
                                .collect(),
                            None if *cmp == Cmp::Exists => Some(Vec::new()),
                            _ => None,
                        };
                        match iris {
                            Some(v) if last.key.is_none() => values.entry(a.clone()).or_default().extend(v),
                            _ => {
                                disqualified.insert(a.clone());
                            }
                        }
                    }
                    Condition::CondSet { members, .. } => stack.extend(members.iter()),
                    Condition::Qualified { inner, .. } => stack.push(inner),
                }
            }
        };
        for f in &self.program.functions {
            walk_conditions(&f.logic, &mut visit);
        }
        for (a, v) in values {
            let empty = model.adt(&a).is_some_and(|x| x.fields.is_empty());
            let used_elsewhere = self.program.functions.iter().any(|f| f.params.iter().any(|p| p.ty.adt() == Some(&a)))
                || self.program.events.iter().any(|e| e.payload.adt() == Some(&a))
                || self.program.functions.iter().any(|f| requests_type(&f.logic, &a));
            if empty && !v.is_empty() && !disqualified.contains(&a) && !used_elsewhere {
                let name = plural(self.names.ty(&a));
                self.enum_names.insert(a.clone(), name);
                self.enums.insert(a, v.into_iter().collect());
            }
        }
    }

    /// Struct fields that would make the struct graph cyclic become id strings.
    fn find_back_edges(&mut self) {
        let model = &self.program.model;
        let mut state: HashMap<Iri, u8> = HashMap::new();
        fn dfs(
            model: &Model,
            enums: &IndexMap<Iri, Vec<Iri>>,
            a: &Iri,
            state: &mut HashMap<Iri, u8>,
            back: &mut HashSet<(Iri, Iri)>,
        ) {
            state.insert(a.clone(), 1);
            if let Some(adt) = model.adt(a) {
                for f in &adt.fields {
                    let Some(t) = f.value_type.adt() else { continue };
                    if enums.contains_key(t) {
                        continue;
                    }
                    match state.get(t) {
                        Some(1) => {
                            back.insert((a.clone(), f.term.clone()));
                        }
                        Some(_) => {}
                        None => dfs(model, enums, t, state, back),
                    }
                }
            }
            state.insert(a.clone(), 2);
        }
        let mut back = HashSet::new();
        for adt in &model.adts {
            if !state.contains_key(&adt.term) {
                dfs(model, &self.enums, &adt.term, &mut state, &mut back);
            }
        }
        self.back_edges = back;
    }

    fn field_ty(&self, adt: &Iri, f: &ModelProperty) -> Ty {
        if self.back_edges.contains(&(adt.clone(), f.term.clone())) {
            return Ty { base: SolTy::IdRef, array: f.max == Max::Unbounded };
        }
        Ty { base: self.base(&f.value_type), array: f.max == Max::Unbounded && !f.use_dictionary }
    }

    fn field_name(&self, adt: &Iri, f: &Iri) -> String {
        let n = self.names.field(adt, f);
        if self.back_edges.contains(&(adt.clone(), f.clone())) {
            format!("{n}Id")
        } else {
            n
        }
    }

    fn struct_def(&self, adt: &ModelAdt, src: &mut String) {
        writeln!(src, "    struct {} {{", self.names.ty(&adt.term)).unwrap();
        writeln!(src, "        string id;").unwrap();
        writeln!(src, "        string rdfType;").unwrap();
        for f in &adt.fields {
            let t = self.field_ty(&adt.term, f);
            let name = self.field_name(&adt.term, &f.term);
            if f.use_dictionary {
                let v = self.sol_type(&Ty { base: t.base.clone(), array: false }, false);
                writeln!(src, "        mapping(string => {v}) {name};").unwrap();
            } else {
                writeln!(src, "        {} {name};", self.sol_type(&t, false)).unwrap();
            }
        }
        writeln!(src, "    }}\n").unwrap();
    }

    fn setters(&mut self, root: &Iri, src: &mut String, fns: &mut Vec<String>) {
        let adt = self.program.model.adt(root).unwrap().clone();
        let store = storage_var(self.names.ty(root));
        for f in &adt.fields {
            let name = self.field_name(root, &f.term);
            let fname = format!("set{}", camel(&name, true));
            let t = self.field_ty(root, f);
            if f.use_dictionary {
                let v = self.sol_type(&Ty { base: t.base.clone(), array: false }, true);
                writeln!(
                    src,
                    "    function {fname}(string memory id, string memory key, {v} value) public {{\n        {store}[id].{name}[key] = value;\n    }}\n"
                )
                .unwrap();
            } else {
                let v = self.sol_type(&t, true);
                writeln!(src, "    function {fname}(string memory id, {v} value) public {{\n        {store}[id].{name} = value;\n    }}\n")
                    .unwrap();
            }
            fns.push(fname);
        }
    }

    fn param_decl(&self, p: &Param) -> (String, Ty) {
        let ty = Ty { base: self.base(&p.ty), array: false };
        if let SolTy::Struct(a) = &ty.base {
            if self.storage_roots.contains(a) {
                return (format!("string memory {}Id", p.name), ty);
            }
        }
        (format!("{} {}", self.sol_type(&ty, true), p.name), ty)
    }

    fn function(&mut self, f: &Function, out: &mut String, names: &mut Vec<String>) -> Result<()> {
        let sites = request_sites(f)?;
        let decls: Vec<(String, Ty)> = f.params.iter().map(|p| self.param_decl(p)).collect();
        let params: Vec<String> = decls.iter().map(|d| d.0.clone()).collect();
        let mut env: Env = HashMap::new();
        for (p, (_, t)) in f.params.iter().zip(&decls) {
            env.insert(p.name.clone(), t.clone());
        }
        // segment 0
        let mut body = String::new();
        let mut e = env.clone();
        self.prologue(f, &mut body, &mut e)?;
        self.statements(&f.logic, &mut body, 2, &mut e, f)?;
        writeln!(out, "    function {}({}) public {{", f.name, params.join(", ")).unwrap();
        out.push_str(&body);
        writeln!(out, "    }}\n").unwrap();
        names.push(f.name.clone());
        for site in sites {
            let rt = Ty { base: SolTy::Struct(site.resource_type.clone()), array: true };
            let name = format!("callback{}", site.callback);
            let mut body = String::new();
            let mut e = env.clone();
            self.prologue(f, &mut body, &mut e)?;
            let i = self.loop_index();
            let elem = self.names.ty(&site.resource_type).to_string();
            writeln!(body, "        for (uint256 {i} = 0; {i} < data.length; {i}++) {{").unwrap();
            writeln!(body, "            {elem} memory {} = data[{i}];", site.result).unwrap();
            let mut inner = e.clone();
            inner.insert(site.result.clone(), Ty { base: SolTy::Struct(site.resource_type.clone()), array: false });
            self.statements(&site.per_result, &mut body, 3, &mut inner, f)?;
            writeln!(body, "        }}").unwrap();
            self.statements(&site.rest, &mut body, 2, &mut e, f)?;
            let mut ps = params.clone();
            ps.push(format!("{} data", self.sol_type(&rt, true)));
            writeln!(out, "    function {name}({}) public {{", ps.join(", ")).unwrap();
            out.push_str(&body);
            writeln!(out, "    }}\n").unwrap();
            names.push(name);
        }
        Ok(())
    }

    fn prologue(&mut self, f: &Function, out: &mut String, env: &mut Env) -> Result<()> {
        for p in &f.params {
            if let Some(a) = p.ty.adt() {
                if self.storage_roots.contains(a) {
                    let ty = self.names.ty(a).to_string();
                    writeln!(out, "        {ty} storage {} = {}[{}Id];", p.name, storage_var(&ty), p.name).unwrap();
                }
            }
        }
        self.statements(&f.preamble.statements, out, 2, env, f)
    }

    fn loop_index(&mut self) -> String {
        let i = if self.loop_counter == 0 { "i".to_string() } else { format!("i{}", self.loop_counter) };
        self.loop_counter += 1;
        i
    }

    fn statements(&mut self, stmts: &[Statement], out: &mut String, depth: usize, env: &mut Env, f: &Function) -> Result<()> {
        for s in stmts {
            self.statement(s, out, depth, env, f)?;
            if matches!(s, Statement::RemoteRequest { .. }) {
                // the rest of this block runs in the callback
                break;
            }
        }
        Ok(())
    }

    fn statement(&mut self, s: &Statement, out: &mut String, depth: usize, env: &mut Env, f: &Function) -> Result<()> {
        let pad = "    ".repeat(depth);
        match s {
            Statement::IfThen { condition, then } => {
                let c = self.condition(condition, env)?;
                writeln!(out, "{pad}if ({c}) {{").unwrap();
                self.statements(&then.statements, out, depth + 1, &mut env.clone(), f)?;
                writeln!(out, "{pad}}}").unwrap();
            }
            Statement::Block(b) => {
                self.statements(&b.statements, out, depth, &mut env.clone(), f)?;
            }
            Statement::Assignment { target, value } => match (target, value) {
                (Operand::Variable { name }, Operand::CreateAdt { adt, arguments }) => {
                    let ty = self.names.ty(adt).to_string();
                    let model_adt = self.program.model.adt(adt).unwrap();
                    let mut args: Vec<(String, String)> = Vec::new();
                    let mut self_env = env.clone();
                    self_env.insert("self".into(), Ty { base: SolTy::Struct(adt.clone()), array: false });
                    for a in &arguments.statements {
                        let Statement::Assignment { target, value } = a else { continue };
                        let Some(step) = target.steps().last() else { continue };
                        let expect = model_adt.field(&step.field).map(|x| self.field_ty(adt, x));
                        args.push((self.field_name(adt, &step.field), self.value(value, expect.as_ref(), env)?));
                    }
                    let complete = model_adt.fields.iter().all(|x| args.iter().any(|(n, _)| *n == self.field_name(adt, &x.term)));
                    if complete {
                        let mut named = vec!["id: \"\"".to_string(), format!("rdfType: {}", quote(adt.as_str()))];
                        named.extend(args.iter().map(|(n, v)| format!("{n}: {v}")));
                        writeln!(out, "{pad}{ty} memory {name} = {ty}({{{}}});", named.join(", ")).unwrap();
                    } else {
                        writeln!(out, "{pad}{ty} memory {name};").unwrap();
                        writeln!(out, "{pad}{name}.rdfType = {};", quote(adt.as_str())).unwrap();
                        for (n, v) in args {
                            writeln!(out, "{pad}{name}.{n} = {v};").unwrap();
                        }
                    }
                    env.insert(name.clone(), Ty { base: SolTy::Struct(adt.clone()), array: false });
                }
                (Operand::Variable { name }, v) if env.contains_key(name) => {
                    let rendered = self.operand(v, env)?;
                    writeln!(out, "{pad}{name} = {rendered};").unwrap();
                }
                (Operand::Variable { name }, v) => {
                    let t = self.type_of(v, env)?;
                    let rendered = self.operand(v, env)?;
                    writeln!(out, "{pad}{} {name} = {rendered};", self.sol_type(&t, true)).unwrap();
                    env.insert(name.clone(), t);
                }
                (t, v) => {
                    let tt = self.type_of(t, env)?;
                    if tt.array {
                        return Err(Error::new(
                            ErrorCode::UnsupportedNesting,
                            format!("cannot append to multi-valued field {} in memory", self.operand(t, env)?),
                        ));
                    }
                    let rendered = self.value(v, Some(&tt), env)?;
                    writeln!(out, "{pad}{} = {rendered};", self.operand(t, env)?).unwrap();
                }
            },
            Statement::Iteration { start, loop_var, body } => {
                let t = self.type_of(start, env)?;
                let elem = Ty { base: t.base.clone(), array: false };
                let arr = self.operand(start, env)?;
                let i = self.loop_index();
                writeln!(out, "{pad}for (uint256 {i} = 0; {i} < {arr}.length; {i}++) {{").unwrap();
                writeln!(out, "{pad}    {} {loop_var} = {arr}[{i}];", self.sol_type(&elem, true)).unwrap();
                let mut inner = env.clone();
                inner.insert(loop_var.clone(), elem);
                self.statement(body, out, depth + 1, &mut inner, f)?;
                writeln!(out, "{pad}}}").unwrap();
            }
            Statement::RemoteRequest { resource_type, select, callback, .. } => {
                writeln!(out, "{pad}Parameter[] memory parameters = new Parameter[]({});", select.len()).unwrap();
                for (k, p) in select.iter().enumerate() {
                    let v = self.as_string(&p.value, env)?;
                    writeln!(out, "{pad}parameters[{k}] = Parameter({}, {v});", quote(&p.name)).unwrap();
                }
                let root = f.params.first().map(|p| match p.ty.adt() {
                    Some(a) if self.storage_roots.contains(a) => format!("{}Id", p.name),
                    _ => p.name.clone(),
                });
                writeln!(
                    out,
                    "{pad}emit OracleRequest(RequestData({}, {}, parameters, \"callback{callback}\"));",
                    root.unwrap_or_else(|| "\"\"".into()),
                    quote(resource_type.local_name()),
                )
                .unwrap();
                writeln!(out, "{pad}return;").unwrap();
            }
            Statement::EmitEvent { name, payload } => {
                writeln!(out, "{pad}emit {name}({});", self.operand(payload, env)?).unwrap();
            }
        }
        Ok(())
    }

    fn type_of(&self, o: &Operand, env: &Env) -> Result<Ty> {
        Ok(match o {
            Operand::Literal { value } => Ty {
                base: match value {
                    LiteralValue::String(_) | LiteralValue::Iri(_) | LiteralValue::List(_) => SolTy::Str,
                    LiteralValue::Integer(_) | LiteralValue::Decimal(_) => SolTy::Int,
                },
                array: false,
            },
            Operand::Variable { name } => env
                .get(name)
                .cloned()
                .ok_or_else(|| Error::new(ErrorCode::Unification, format!("unbound variable {name}")))?,
            Operand::PropertyPath { start, steps } => {
                let mut t = self.type_of(start, env)?;
                for s in steps {
                    if s.field.as_str() == RDF_TYPE {
                        t = Ty { base: SolTy::Str, array: false };
                        continue;
                    }
                    let f = self.program.model.step_field(&s.adt, &s.field).ok_or_else(|| {
                        Error::new(ErrorCode::MissingField, format!("{} is not a field of {}", s.name, s.adt.local_name()))
                    })?;
                    t = self.field_ty(&s.adt, &f);
                    if s.key.is_some() {
                        t.array = false;
                    }
                }
                t
            }
            Operand::CreateAdt { adt, .. } => Ty { base: SolTy::Struct(adt.clone()), array: false },
            Operand::Operation { .. } => Ty { base: SolTy::Int, array: false },
        })
    }

    fn operand(&mut self, o: &Operand, env: &Env) -> Result<String> {
        match o {
            Operand::Literal { value } => self.literal(value, None),
            Operand::Variable { name } => Ok(name.clone()),
            Operand::PropertyPath { start, steps } => {
                let mut s = self.operand(start, env)?;
                for (i, st) in steps.iter().enumerate() {
                    if st.field.as_str() == RDF_TYPE {
                        s.push_str(".rdfType");
                        continue;
                    }
                    if self.back_edges.contains(&(st.adt.clone(), st.field.clone())) && i + 1 < steps.len() {
                        return Err(Error::new(
                            ErrorCode::UnsupportedNesting,
                            format!("path continues through recursive reference {}", st.name),
                        ));
                    }
                    write!(s, ".{}", self.field_name(&st.adt, &st.field)).unwrap();
                    if let Some(k) = &st.key {
                        let key = match k {
                            LiteralValue::Iri(i) => quote(i.as_str()),
                            other => self.literal(other, None)?,
                        };
                        write!(s, "[{key}]").unwrap();
                    }
                }
                Ok(s)
            }
            Operand::CreateAdt { adt, .. } => Err(Error::new(
                ErrorCode::UnsupportedNesting,
                format!("nested construction of {} must be assigned to a variable first", adt.local_name()),
            )),
            Operand::Operation { operator, operands } => {
                let parts: Vec<String> = operands
                    .iter()
                    .map(|x| {
                        let r = self.operand(x, env)?;
                        Ok(if matches!(x, Operand::Operation { .. }) { format!("({r})") } else { r })
                    })
                    .collect::<Result<_>>()?;
                Ok(match operator {
                    Operator::Exponent => format!("{} ** uint256({})", parts[0], parts[1..].join(" ** ")),
                    _ => parts.join(&format!(" {} ", operator.symbol())),
                })
            }
        }
    }

    fn literal(&self, v: &LiteralValue, expect: Option<&Ty>) -> Result<String> {
        Ok(match v {
            LiteralValue::String(s) => quote(s),
            LiteralValue::Integer(i) => i.to_string(),
            LiteralValue::Decimal(d) => d.clone(),
            LiteralValue::Iri(i) => match expect.map(|t| &t.base) {
                Some(SolTy::Enum(a)) => format!("{}.{}", self.enum_names[a], camel(i.local_name(), true)),
                _ => quote(i.as_str()),
            },
            LiteralValue::List(_) => {
                return Err(Error::new(ErrorCode::Schema, "list literal outside an 'in' comparison"));
            }
        })
    }

    /// Renders `v` for assignment into a slot of type `expect`.
    fn value(&mut self, v: &Operand, expect: Option<&Ty>, env: &Env) -> Result<String> {
        match v {
            Operand::Literal { value } => self.literal(value, expect),
            _ => {
                let t = self.type_of(v, env)?;
                let r = self.operand(v, env)?;
                Ok(match (expect.map(|e| &e.base), &t.base) {
                    (Some(SolTy::IdRef), SolTy::Struct(_)) => format!("{r}.id"),
                    _ => r,
                })
            }
        }
    }

    fn as_string(&mut self, v: &Operand, env: &Env) -> Result<String> {
        if let Operand::Literal { value } = v {
            return Ok(match value {
                LiteralValue::String(s) => quote(s),
                LiteralValue::Integer(i) => quote(&i.to_string()),
                LiteralValue::Decimal(d) => quote(d),
                LiteralValue::Iri(i) => quote(i.as_str()),
                LiteralValue::List(_) => return Err(Error::new(ErrorCode::Schema, "list literal as request parameter")),
            });
        }
        let t = self.type_of(v, env)?;
        let r = self.operand(v, env)?;
        Ok(match t.base {
            SolTy::Struct(_) => format!("{r}.id"),
            SolTy::Str | SolTy::IdRef => r,
            SolTy::Int => {
                self.uses_to_string = true;
                format!("toString({r})")
            }
            SolTy::Enum(_) => {
                self.uses_to_string = true;
                format!("toString(int256(uint256({r})))")
            }
            SolTy::Bool => format!("({r} ? \"true\" : \"false\")"),
        })
    }

    fn condition(&mut self, c: &Condition, env: &Env) -> Result<String> {
        match c {
            Condition::Comparison { left, cmp, right } => self.comparison(left, *cmp, right.as_ref(), env),
            Condition::CondSet { set, members } => {
                if members.is_empty() {
                    return Ok(match set {
                        SetKind::And => "true".into(),
                        SetKind::Or => "false".into(),
                    });
                }
                let sep = match set {
                    SetKind::And => " && ",
                    SetKind::Or => " || ",
                };
                let parts: Vec<String> = members
                    .iter()
                    .map(|m| {
                        let s = self.condition(m, env)?;
                        Ok(if matches!(m, Condition::CondSet { .. }) { format!("({s})") } else { s })
                    })
                    .collect::<Result<_>>()?;
                Ok(parts.join(sep))
            }
            Condition::Qualified { qualifier, start, loop_var, inner } => {
                let t = self.type_of(start, env)?;
                let mut free = Vec::new();
                free_vars(inner, &mut vec![loop_var.clone()], &mut free);
                let free: Vec<(String, Ty)> = free
                    .into_iter()
                    .map(|v| {
                        let t = env
                            .get(&v)
                            .cloned()
                            .ok_or_else(|| Error::new(ErrorCode::Unification, format!("unbound variable {v}")))?;
                        Ok((v, t))
                    })
                    .collect::<Result<_>>()?;
                let name = format!("check{}", self.checks.len() + 1);
                let mut args = vec![self.operand(start, env)?];
                args.extend(free.iter().map(|(v, _)| v.clone()));
                self.checks.push(CheckFn {
                    name: name.clone(),
                    elem: Ty { base: t.base, array: false },
                    loop_var: loop_var.clone(),
                    inner: (**inner).clone(),
                    universal: *qualifier == Qualifier::Universal,
                    free,
                });
                Ok(format!("{name}({})", args.join(", ")))
            }
        }
    }

    fn check_fn(&mut self, i: usize) -> Result<String> {
        let (name, elem, loop_var, inner, universal, free) = {
            let c = &self.checks[i];
            (c.name.clone(), c.elem.clone(), c.loop_var.clone(), c.inner.clone(), c.universal, c.free.clone())
        };
        let mut env: Env = HashMap::new();
        env.insert(loop_var.clone(), elem.clone());
        let arr = Ty { base: elem.base.clone(), array: true };
        let values = plural(&loop_var);
        let mut params = vec![format!("{} {values}", self.sol_type(&arr, true))];
        for (v, t) in &free {
            params.push(format!("{} {v}", self.sol_type(t, true)));
            env.insert(v.clone(), t.clone());
        }
        let cond = self.condition(&inner, &env)?;
        let idx = "i";
        let mut s = String::new();
        writeln!(s, "    function {name}({}) private pure returns (bool) {{", params.join(", ")).unwrap();
        writeln!(s, "        for (uint256 {idx} = 0; {idx} < {values}.length; {idx}++) {{").unwrap();
        writeln!(s, "            {} {loop_var} = {values}[{idx}];", self.sol_type(&elem, true)).unwrap();
        if universal {
            writeln!(s, "            if (!({cond})) {{\n                return false;\n            }}").unwrap();
            writeln!(s, "        }}\n        return true;\n    }}\n").unwrap();
        } else {
            writeln!(s, "            if ({cond}) {{\n                return true;\n            }}").unwrap();
            writeln!(s, "        }}\n        return false;\n    }}\n").unwrap();
        }
        Ok(s)
    }

    fn exists(&mut self, left: &Operand, env: &Env) -> Result<String> {
        let t = self.type_of(left, env)?;
        let l = self.operand(left, env)?;
        Ok(if t.array {
            format!("{l}.length != 0")
        } else {
            match t.base {
                SolTy::Str | SolTy::IdRef => format!("bytes({l}).length != 0"),
                SolTy::Int => format!("{l} != 0"),
                SolTy::Bool => l,
                SolTy::Enum(a) => format!("{l} != {}.Unknown", self.enum_names[&a]),
                SolTy::Struct(_) => format!("bytes({l}.id).length != 0"),
            }
        })
    }

    fn comparison(&mut self, left: &Operand, cmp: Cmp, right: Option<&Operand>, env: &Env) -> Result<String> {
        if cmp == Cmp::Exists {
            return self.exists(left, env);
        }
        let right = right.ok_or_else(|| Error::new(ErrorCode::Schema, "comparison lacks a right operand"))?;
        if cmp == Cmp::In {
            let Operand::Literal { value: LiteralValue::List(items) } = right else {
                return Err(Error::new(ErrorCode::Schema, "'in' requires a literal list"));
            };
            let parts: Vec<String> = items
                .iter()
                .map(|i| self.comparison(left, Cmp::Equal, Some(&Operand::lit(i.clone())), env))
                .collect::<Result<_>>()?;
            return Ok(if parts.is_empty() { "false".into() } else { format!("({})", parts.join(" || ")) });
        }
        let lt = self.type_of(left, env)?;
        let mut l = self.operand(left, env)?;
        let mut rt = self.type_of(right, env)?;
        let mut r = match right {
            Operand::Literal { value } => self.literal(value, Some(&lt))?,
            _ => self.operand(right, env)?,
        };
        if let Operand::Literal { value: LiteralValue::Iri(_) } = right {
            if let SolTy::Enum(_) = lt.base {
                return Ok(format!("{l} == {r}"));
            }
            rt = Ty { base: SolTy::Str, array: false };
        }
        let mut base = lt.base.clone();
        if let SolTy::Struct(_) = base {
            l.push_str(".id");
            base = SolTy::Str;
        }
        if let SolTy::Struct(_) = rt.base {
            r.push_str(".id");
        }
        if let SolTy::Enum(_) = base {
            return Ok(format!("{l} {} {r}", cmp.symbol()));
        }
        Ok(match base {
            SolTy::Str | SolTy::IdRef => match cmp {
                Cmp::Equal => format!("keccak256(bytes({l})) == keccak256(bytes({r}))"),
                _ => {
                    return Err(Error::new(
                        ErrorCode::UnsupportedOperator,
                        format!("ordering comparison {} on strings", cmp.symbol()),
                    ))
                }
            },
            _ => format!("{l} {} {r}", cmp.symbol()),
        })
    }
}

fn free_vars(c: &Condition, bound: &mut Vec<String>, out: &mut Vec<String>) {
    fn op(o: &Operand, bound: &[String], out: &mut Vec<String>) {
        match o {
            Operand::Variable { name } => {
                if !bound.contains(name) && !out.contains(name) {
                    out.push(name.clone());
                }
            }
            Operand::PropertyPath { start, .. } => op(start, bound, out),
            Operand::Operation { operands, .. } => operands.iter().for_each(|x| op(x, bound, out)),
            _ => {}
        }
    }
    match c {
        Condition::Comparison { left, right, .. } => {
            op(left, bound, out);
            if let Some(r) = right {
                op(r, bound, out);
            }
        }
        Condition::CondSet { members, .. } => members.iter().for_each(|m| free_vars(m, bound, out)),
        Condition::Qualified { start, loop_var, inner, .. } => {
            op(start, bound, out);
            bound.push(loop_var.clone());
            free_vars(inner, bound, out);
            bound.pop();
        }
    }
}

fn walk_conditions(stmts: &[Statement], f: &mut impl FnMut(&Condition)) {
    for s in stmts {
        match s {
            Statement::IfThen { condition, then } => {
                f(condition);
                walk_conditions(&then.statements, f);
            }
            Statement::Block(b) => walk_conditions(&b.statements, f),
            Statement::Iteration { body, .. } => walk_conditions(std::slice::from_ref(body.as_ref()), f),
            _ => {}
        }
    }
}

fn requests_type(stmts: &[Statement], a: &Iri) -> bool {
    stmts.iter().any(|s| match s {
        Statement::RemoteRequest { resource_type, .. } => resource_type == a,
        Statement::IfThen { then, .. } | Statement::Block(then) => requests_type(&then.statements, a),
        Statement::Iteration { body, .. } => requests_type(std::slice::from_ref(body.as_ref()), a),
        _ => false,
    })
}
