use std::collections::HashSet;

use kgsc_core::backend::pseudo::operand as render;
use kgsc_core::backend::{emit_pseudocode, emit_solidity, PseudoOptions, SolidityOptions};
use kgsc_core::compile::{compile, Compilation};
use kgsc_core::examples::{INSURANCE_ONTOLOGY, INSURANCE_RULES};
use kgsc_core::ir::*;
use kgsc_core::logic::LogicOptions;
use kgsc_core::n3::{parse_document, pretty_print};
use kgsc_core::ErrorCode;
use proptest::prelude::*;

/// Edges of the insurance vocabulary usable in random rules: (class, predicate, target, inverse).
const EDGES: &[(&str, &str, Target, bool)] = &[
    ("CoverageEligibilityRequest", "fhir:purpose", Target::Str(&["validation", "discovery"]), false),
    ("CoverageEligibilityRequest", "fhir:item", Target::Node("MedicationRequest"), false),
    ("CoverageEligibilityRequest", "fhir:patient", Target::Node("Patient"), false),
    ("CoverageEligibilityRequest", ":immunoTherapyItem", Target::Node("MedicationRequest"), false),
    ("MedicationRequest", "fhir:medication", Target::Node("Medication"), false),
    ("MedicationRequest", ":eligibleTransplant", Target::Node("Procedure"), false),
    ("Medication", "fhir:concept", Target::Str(&["DBCAT005063", "DBCAT000001"]), false),
    ("Patient", "fhir:subject", Target::Node("Claim"), true),
    ("Patient", "fhir:policyHolder", Target::Node("Coverage"), true),
    ("Claim", "fhir:procedure", Target::Node("Procedure"), false),
    ("Claim", "fhir:insurance", Target::Node("Insurance"), false),
    ("Procedure", "fhir:status", Target::Str(&["completed", "planned"]), false),
    ("Procedure", "fhir:code", Target::Int, false),
    ("Insurance", "fhir:insurer", Target::Iri(&[":Medicare", ":Medicaid"]), false),
    ("Insurance", "fhir:class", Target::Iri(&[":PartA", ":PartB"]), false),
    ("Coverage", "fhir:status", Target::Str(&["active", "cancelled"]), false),
    ("Coverage", "fhir:insurer", Target::Iri(&[":Medicare"]), false),
    ("Coverage", "fhir:class", Target::Iri(&[":PartB", ":PartD"]), false),
];

#[derive(Debug, Clone, Copy)]
enum Target {
    Node(&'static str),
    Str(&'static [&'static str]),
    Iri(&'static [&'static str]),
    Int,
}

/// Builds a connected, star-shaped rule over the insurance vocabulary from index choices.
pub fn random_rule(choices: &[(usize, usize, usize)]) -> String {
    let mut nodes: Vec<&str> = vec!["CoverageEligibilityRequest"];
    let mut body = Vec::new();
    for (k, &(n, e, v)) in choices.iter().enumerate() {
        let at = n % nodes.len();
        let options: Vec<_> = EDGES.iter().filter(|x| x.0 == nodes[at]).collect();
        if options.is_empty() {
            continue;
        }
        let (_, pred, target, inverse) = *options[e % options.len()];
        let obj = match target {
            Target::Node(class) => {
                nodes.push(class);
                format!("?x{}", nodes.len() - 1)
            }
            Target::Str(pool) => format!("'{}'", pool[v % pool.len()]),
            Target::Iri(pool) => pool[v % pool.len()].to_string(),
            Target::Int if v % 2 == 0 => (v % 7).to_string(),
            Target::Int => {
                body.push(format!("?v{k} math:greaterThan {} .", v % 7));
                format!("?v{k}")
            }
        };
        if inverse {
            body.insert(0, format!("{obj} {pred} ?x{at} ."));
        } else {
            body.insert(0, format!("?x{at} {pred} {obj} ."));
        }
    }
    format!(
        "@prefix fhir: <http://hl7.org/fhir/> .\n@prefix : <http://example.org/insurance#> .\n\
         @prefix cg: <https://w3id.org/kgsc/cg#> .\n@prefix math: <http://www.w3.org/2000/10/swap/math#> .\n\
         {{ ?x0 a fhir:CoverageEligibilityRequest .\n  {}\n}} => {{ ?x0 :flag 'yes' }} ; cg:functionParam ?x0 .\n",
        body.join("\n  ")
    )
}

pub fn rule_strategy() -> impl Strategy<Value = String> {
    prop::collection::vec((0..8usize, 0..8usize, 0..8usize), 1..7).prop_map(|c| random_rule(&c))
}

/// The running example with each rule body's triples reordered by `keys`.
pub fn shuffled_example(keys: &[u32]) -> String {
    let mut doc = parse_document(INSURANCE_RULES).unwrap();
    let mut k = keys.iter().cycle();
    for r in &mut doc.rules {
        let mut tagged: Vec<_> = r.body.drain(..).map(|t| (*k.next().unwrap(), t)).collect();
        tagged.sort_by_key(|(key, _)| *key);
        r.body = tagged.into_iter().map(|(_, t)| t).collect();
    }
    let order: Vec<u32> = doc.rules.iter().map(|_| *k.next().unwrap()).collect();
    let mut rules: Vec<_> = doc.rules.drain(..).zip(order).collect();
    rules.sort_by_key(|(_, o)| *o);
    doc.rules = rules.into_iter().map(|(r, _)| r).collect();
    pretty_print(&doc)
}

pub fn compile_ok(text: &str) -> Option<Compilation> {
    match compile(text, INSURANCE_ONTOLOGY, LogicOptions::default()) {
        Ok(c) => Some(c),
        // nested loops around requests are outside the supported lowering
        Err(e) if e.code == ErrorCode::UnsupportedNesting => None,
        Err(e) => panic!("{e}\n{text}"),
    }
}

fn is_path(o: &Operand) -> bool {
    matches!(o, Operand::PropertyPath { .. })
}

/// Proper prefixes of a path that need an existence guard (those not ending in a keyed step).
fn guard_prefixes(o: &Operand) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = o.parent();
    while let Some(p) = cur {
        if !is_path(&p) {
            break;
        }
        if p.steps().last().is_some_and(|s| s.key.is_none() && !s.null_safe) {
            out.push(render(&p));
        }
        cur = p.parent();
    }
    out
}

fn check_guards(c: &Condition, guarded: &mut HashSet<String>, missing: &mut Vec<String>) {
    match c {
        Condition::Comparison { left, cmp, right } => {
            for o in std::iter::once(left).chain(right.iter()) {
                for p in guard_prefixes(o) {
                    if !guarded.contains(&p) {
                        missing.push(format!("{} lacks guard {p}", render(o)));
                    }
                }
            }
            if *cmp == Cmp::Exists {
                guarded.insert(render(left));
            }
        }
        Condition::CondSet { members, .. } => {
            for m in members {
                check_guards(m, guarded, missing);
            }
        }
        Condition::Qualified { inner, .. } => check_guards(inner, &mut guarded.clone(), missing),
    }
}

fn walk_guards(stmts: &[Statement], guarded: &HashSet<String>, missing: &mut Vec<String>) {
    for s in stmts {
        match s {
            Statement::IfThen { condition, then } => {
                let mut g = guarded.clone();
                check_guards(condition, &mut g, missing);
                walk_guards(&then.statements, &g, missing);
            }
            Statement::Block(b) => walk_guards(&b.statements, guarded, missing),
            Statement::Iteration { body, .. } => walk_guards(std::slice::from_ref(body.as_ref()), guarded, missing),
            _ => {}
        }
    }
}

pub fn unguarded(p: &BridgeProgram) -> Vec<String> {
    let mut missing = Vec::new();
    for f in &p.functions {
        walk_guards(&f.logic, &HashSet::new(), &mut missing);
    }
    missing
}

pub fn artifacts(c: &Compilation) -> (String, String, String) {
    let sol = emit_solidity(&c.program, &SolidityOptions::default()).unwrap().source;
    (serialize(&c.program), emit_pseudocode(&c.program, PseudoOptions::full()), sol)
}

pub fn junk_strategy() -> impl Strategy<Value = Vec<(u32, usize, bool)>> {
    prop::collection::vec((0..1000u32, 0..11usize, any::<bool>()), 0..12)
}

/// The insurance ontology plus unrelated classes, each with a property linking it to a real class.
pub fn junk_ontology(junk: &[(u32, usize, bool)]) -> String {
    let classes = [
        "CoverageEligibilityRequest", "MedicationRequest", "Medication", "Procedure", "Patient",
        "Claim", "Insurance", "Insurer", "Class", "Coverage", "CoverageEligibilityResponse",
    ];
    let mut ont = INSURANCE_ONTOLOGY.to_string();
    for (n, c, as_domain) in junk {
        ont.push_str(&format!("\n<http://junk.org/C{n}> a owl:Class ."));
        let (dom, range) = if *as_domain {
            (format!("fhir:{}", classes[*c]), format!("<http://junk.org/C{n}>"))
        } else {
            (format!("<http://junk.org/C{n}>"), format!("fhir:{}", classes[*c]))
        };
        ont.push_str(&format!("\n<http://junk.org/p{n}> a owl:ObjectProperty ; rdfs:domain {dom} ; rdfs:range {range} ."));
    }
    ont
}

pub fn prop_guards(text: &str) -> Result<(), TestCaseError> {
    if let Some(c) = compile_ok(text) {
        let m = unguarded(&c.program);
        prop_assert!(m.is_empty(), "{m:?}\n{text}");
    }
    Ok(())
}

pub fn prop_well_typed(text: &str) -> Result<(), TestCaseError> {
    if let Some(c) = compile_ok(text) {
        let d = validate(&c.program);
        prop_assert!(d.is_empty(), "{d:?}\n{text}");
    }
    Ok(())
}

pub fn prop_round_trip(text: &str) -> Result<(), TestCaseError> {
    if let Some(c) = compile_ok(text) {
        let s = serialize(&c.program);
        let back = deserialize(&s).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&back, &c.program);
        prop_assert_eq!(serialize(&back), s);
    }
    Ok(())
}

pub fn prop_deterministic(text: &str) -> Result<(), TestCaseError> {
    if let (Some(a), Some(b)) = (compile_ok(text), compile_ok(text)) {
        prop_assert_eq!(artifacts(&a), artifacts(&b));
    }
    Ok(())
}

pub fn prop_adt_minimal(text: &str, junk: &[(u32, usize, bool)]) -> Result<(), TestCaseError> {
    let base = compile(text, INSURANCE_ONTOLOGY, LogicOptions::default());
    let fuzzed = compile(text, &junk_ontology(junk), LogicOptions::default());
    match (base, fuzzed) {
        (Ok(a), Ok(b)) => prop_assert_eq!(a.program, b.program),
        (Err(a), Err(b)) => prop_assert_eq!(a.code, b.code),
        (a, b) => prop_assert!(false, "{:?} vs {:?}", a.err(), b.err()),
    }
    Ok(())
}
