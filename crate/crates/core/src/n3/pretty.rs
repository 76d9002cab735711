//! Canonical dialect printer: two-space indent, one triple per line, full IRIs.

use std::collections::HashMap;
use std::fmt::Write;

use crate::n3::parser::ParsedDocument;
use crate::n3::term::*;

pub fn pretty_print(doc: &ParsedDocument) -> String {
    let mut out = String::new();
    for (p, iri) in &doc.prefixes {
        writeln!(out, "@prefix {p}: <{iri}> .").unwrap();
    }
    if !doc.prefixes.is_empty() {
        out.push('\n');
    }
    write_triples(&mut out, &doc.ground_triples, 0);
    for rule in &doc.rules {
        out.push_str("{\n");
        write_triples(&mut out, &rule.body, 1);
        for req in &rule.requests {
            out.push_str("  {\n");
            write_triples(&mut out, &req.graph, 2);
            writeln!(out, "  }} <{CG_NS}request> {} .", req.location).unwrap();
        }
        out.push_str("} => {\n");
        write_triples(&mut out, &rule.head, 1);
        out.push('}');
        for v in &rule.function_params {
            write!(out, " ;\n  <{CG_NS}functionParam> ?{v}").unwrap();
        }
        if let Some(e) = &rule.event_name {
            write!(out, " ;\n  <{CG_NS}event> \"{}\"", escape(e)).unwrap();
        }
        for (p, o) in &rule.extra_annotations {
            write!(out, " ;\n  {p} {o}").unwrap();
        }
        out.push_str(" .\n");
    }
    out
}

/// Blank nodes are printed inline as `[ ... ]` property lists at their single object
/// occurrence, or as `[] ...` subject statements when never used as an object.
fn write_triples(out: &mut String, triples: &[Triple], depth: usize) {
    let mut by_subject: HashMap<u32, Vec<&Triple>> = HashMap::new();
    let mut as_object: HashMap<u32, usize> = HashMap::new();
    for t in triples {
        if let TermKind::BlankNode(b) = t.subject.kind {
            by_subject.entry(b).or_default().push(t);
        }
        collect_object_blanks(&t.object, &mut as_object);
    }
    let indent = "  ".repeat(depth);
    let mut printed_subjects = std::collections::HashSet::new();
    for t in triples {
        match t.subject.kind {
            TermKind::BlankNode(b) if as_object.contains_key(&b) => continue,
            TermKind::BlankNode(b) => {
                if !printed_subjects.insert(b) {
                    continue;
                }
                let pairs: Vec<String> = by_subject[&b]
                    .iter()
                    .map(|t| format!("{} {}", t.predicate, term(&t.object, &by_subject)))
                    .collect();
                writeln!(out, "{indent}[] {} .", pairs.join(" ; ")).unwrap();
            }
            _ => {
                writeln!(out, "{indent}{} {} {} .", term(&t.subject, &by_subject), t.predicate, term(&t.object, &by_subject))
                    .unwrap();
            }
        }
    }
}

fn collect_object_blanks(t: &Term, acc: &mut HashMap<u32, usize>) {
    match &t.kind {
        TermKind::BlankNode(b) => *acc.entry(*b).or_default() += 1,
        TermKind::List(items) => items.iter().for_each(|i| collect_object_blanks(i, acc)),
        _ => {}
    }
}

fn term(t: &Term, by_subject: &HashMap<u32, Vec<&Triple>>) -> String {
    match &t.kind {
        TermKind::BlankNode(b) => match by_subject.get(b) {
            Some(ts) => {
                let pairs: Vec<String> =
                    ts.iter().map(|t| format!("{} {}", t.predicate, term(&t.object, by_subject))).collect();
                format!("[ {} ]", pairs.join(" ; "))
            }
            None => "[]".to_string(),
        },
        TermKind::List(items) => {
            let inner: Vec<String> = items.iter().map(|i| term(i, by_subject)).collect();
            format!("({})", inner.join(" "))
        }
        _ => t.to_string(),
    }
}

/// Renumbers blank nodes by first occurrence so documents can be compared up to blank identity.
pub fn canonicalize_blanks(doc: &ParsedDocument) -> ParsedDocument {
    let mut map = HashMap::new();
    let mut doc = doc.clone();
    let fix_triples = |ts: &mut Vec<Triple>, map: &mut HashMap<u32, u32>| {
        for t in ts.iter_mut() {
            renumber(&mut t.subject, map);
            renumber(&mut t.object, map);
        }
    };
    fix_triples(&mut doc.ground_triples, &mut map);
    for r in &mut doc.rules {
        fix_triples(&mut r.body, &mut map);
        for q in &mut r.requests {
            fix_triples(&mut q.graph, &mut map);
        }
        fix_triples(&mut r.head, &mut map);
    }
    doc
}

fn renumber(t: &mut Term, map: &mut HashMap<u32, u32>) {
    match &mut t.kind {
        TermKind::BlankNode(b) => {
            let n = map.len() as u32;
            *b = *map.entry(*b).or_insert(n);
        }
        TermKind::List(items) => items.iter_mut().for_each(|i| renumber(i, map)),
        _ => {}
    }
}
