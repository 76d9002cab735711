//! ADT model generation from rule graphs, model merging, and identifier mangling.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::Serialize;

use crate::error::{Error, ErrorCode, Result};
use crate::graph::{Clause, NodeId, RuleGraph};
use crate::ir::{Max, Model, ModelAdt, ModelProperty, ModelType};
use crate::n3::{Iri, TermKind, RDF_TYPE, XSD_NS};
use crate::ontology::{Ontology, TypeRef};

pub fn generate_adts(graphs: &[RuleGraph], ont: &Ontology) -> Result<Model> {
    let head_preds: HashSet<Iri> = graphs.iter().flat_map(|g| g.head_predicates()).collect();
    let mut model = Model::default();
    for g in graphs {
        let rule_model = rule_model(g, ont, &head_preds)?;
        merge_into(&mut model, rule_model)?;
    }
    Ok(model)
}

/// Unions ADTs by term and fields by property; the stricter cardinality wins.
pub fn merge_into(model: &mut Model, other: Model) -> Result<()> {
    for adt in other.adts {
        let Some(existing) = model.adt_mut(&adt.term) else {
            model.adts.push(adt);
            continue;
        };
        let adt_name = existing.name.clone();
        for f in adt.fields {
            match existing.field_mut(&f.term) {
                None => existing.fields.push(f),
                Some(e) => {
                    if e.value_type != f.value_type {
                        return Err(Error::new(
                            ErrorCode::FieldTypeConflict,
                            format!(
                                "field {}.{} has conflicting value types {:?} and {:?}",
                                adt_name, e.name, e.value_type, f.value_type
                            ),
                        ));
                    }
                    if f.max == Max::One {
                        e.max = Max::One;
                    }
                    if f.use_dictionary {
                        e.use_dictionary = true;
                        e.dictionary_key = f.dictionary_key.clone();
                    }
                    if e.use_dictionary && e.max == Max::One {
                        return Err(Error::new(
                            ErrorCode::FieldTypeConflict,
                            format!("field {}.{} is indexed but single-valued elsewhere", adt_name, e.name),
                        ));
                    }
                }
            }
        }
    }
    Ok(())
}

fn cardinality(ont: &Ontology, p: &Iri, head_preds: &HashSet<Iri>) -> Max {
    let info = ont.property(p);
    if !ont.is_declared(p) && !info.synthetic && head_preds.contains(p) {
        return Max::One;
    }
    if info.is_multi_valued() {
        Max::Unbounded
    } else {
        Max::One
    }
}

fn ensure_adt(model: &mut Model, class: &Iri, ont: &Ontology) {
    if model.adt(class).is_none() {
        model.adts.push(ModelAdt {
            term: class.clone(),
            name: class.local_name().to_string(),
            label: ont.class_labels.get(class).cloned(),
            fields: Vec::new(),
        });
    }
}

fn add_field(model: &mut Model, adt: &Iri, prop: ModelProperty) -> Result<()> {
    let a = model.adt_mut(adt).expect("ADT created before its fields");
    match a.field_mut(&prop.term) {
        Some(existing) if existing.value_type != prop.value_type => Err(Error::new(
            ErrorCode::FieldTypeConflict,
            format!("field {}.{} used with conflicting value types", a.name, prop.name),
        )),
        Some(existing) => {
            existing.use_dictionary |= prop.use_dictionary;
            if prop.dictionary_key.is_some() {
                existing.dictionary_key = prop.dictionary_key;
            }
            Ok(())
        }
        None => {
            let mut prop = prop;
            if a.fields.iter().any(|f| f.name == prop.name) {
                prop.name = format!("{}_{}", prop.name, namespace_tag(&prop.term));
            }
            a.fields.push(prop);
            Ok(())
        }
    }
}

fn rule_model(g: &RuleGraph, ont: &Ontology, head_preds: &HashSet<Iri>) -> Result<Model> {
    let mut model = Model::default();
    let mut stack: Vec<NodeId> = vec![g.root];
    stack.extend(g.head_roots.iter().rev());
    let mut seen = HashSet::new();
    // depth-first in edge order
    let mut order = Vec::new();
    while let Some(n) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        order.push(n);
        for e in g.out_edges(n).collect::<Vec<_>>().into_iter().rev() {
            if !e.join && e.comparator.is_none() {
                stack.push(e.target);
            }
        }
    }
    for n in order {
        let node = &g.nodes[n];
        if let Some(c) = g.class_of(n) {
            ensure_adt(&mut model, c, ont);
        }
        for e in g.out_edges(n) {
            if e.comparator.is_some() || e.is_type() {
                continue;
            }
            let Some(src) = g.class_of(n).cloned() else {
                return Err(Error::at(
                    ErrorCode::LiteralTyping,
                    e.pos,
                    format!("{} is a datatype value and cannot have property {}", node.term, e.property.local_name()),
                ));
            };
            let target = &g.nodes[e.target];
            let mut value_type = match &target.resolved {
                Some(TypeRef::Class(c)) => ModelType::Adt(c.clone()),
                Some(TypeRef::Datatype(d)) => ModelType::Datatype(d.clone()),
                None => ModelType::Datatype(Iri(format!("{XSD_NS}anyURI"))),
            };
            let range = ont.property(&e.property).range;
            if let TermKind::Literal(lit) = &target.term.kind {
                match &range {
                    Some(r) if ont.is_class(r) => {
                        let Some(key) = ont.key_property(r).cloned() else {
                            return Err(Error::at(
                                ErrorCode::LiteralTyping,
                                target.term.pos,
                                format!(
                                    "literal {} used for {} whose range {} has no owl:hasKey",
                                    target.term,
                                    e.property.local_name(),
                                    r.local_name()
                                ),
                            ));
                        };
                        ensure_adt(&mut model, r, ont);
                        let key_type = ont.property(&key).range.unwrap_or_else(|| lit.datatype());
                        add_field(
                            &mut model,
                            r,
                            plain_field(&key, ModelType::Datatype(key_type), cardinality(ont, &key, head_preds), ont),
                        )?;
                        value_type = ModelType::Adt(r.clone());
                    }
                    Some(r) => value_type = ModelType::Datatype(r.clone()),
                    None => {}
                }
            } else if let (TermKind::Iri(_), Some(r)) = (&target.term.kind, &range) {
                if !ont.is_class(r) {
                    return Err(Error::at(
                        ErrorCode::LiteralTyping,
                        target.term.pos,
                        format!("IRI {} used for datatype property {}", target.term, e.property.local_name()),
                    ));
                }
            }
            if let ModelType::Adt(c) = &value_type {
                ensure_adt(&mut model, c, ont);
            }
            let max = cardinality(ont, &e.property, head_preds);
            let mut field = plain_field(&e.property, value_type, max, ont);
            if e.clause == Clause::Body && max == Max::Unbounded && g.dictionary_key(e.target).is_some() {
                field.use_dictionary = true;
                field.dictionary_key = Some(Iri::new(RDF_TYPE));
            }
            field.inverse_of = e.original.clone();
            add_field(&mut model, &src, field)?;
            if let (Some(orig), Some(tc)) = (&e.original, g.class_of(e.target)) {
                let back = plain_field(orig, ModelType::Adt(src.clone()), cardinality(ont, orig, head_preds), ont);
                add_field(&mut model, &tc.clone(), back)?;
            }
        }
    }
    Ok(model)
}

fn plain_field(p: &Iri, value_type: ModelType, max: Max, ont: &Ontology) -> ModelProperty {
    ModelProperty {
        term: p.clone(),
        name: p.local_name().to_string(),
        label: ont.properties.get(p).and_then(|i| i.label.clone()),
        max,
        value_type,
        use_dictionary: false,
        dictionary_key: None,
        inverse_of: None,
    }
}

fn namespace_tag(iri: &Iri) -> String {
    let ns = iri.namespace().trim_end_matches(['#', '/', ':']);
    let tag = ns.rsplit(['/', '#', ':', '.']).find(|s| !s.is_empty()).unwrap_or("ns");
    tag.chars().filter(|c| c.is_ascii_alphanumeric()).collect()
}

const RESERVED: &[&str] = &[
    "abstract", "address", "after", "alias", "anonymous", "apply", "as", "assembly", "auto", "bool", "break",
    "byte", "bytes", "calldata", "case", "catch", "constant", "constructor", "continue", "contract", "copyof",
    "data", "default", "define", "delete", "do", "else", "emit", "enum", "error", "event", "external", "fallback",
    "false", "final", "for", "function", "if", "immutable", "implements", "import", "in", "indexed", "inline",
    "interface", "internal", "is", "let", "library", "macro", "mapping", "match", "memory", "modifier", "mutable",
    "new", "null", "of", "override", "partial", "payable", "pragma", "private", "promise", "public", "pure",
    "receive", "reference", "relocatable", "req", "return", "returns", "revert", "sealed", "sizeof", "static",
    "storage", "string", "struct", "super", "supports", "switch", "this", "true", "try", "type", "typedef",
    "typeof", "uint", "unchecked", "using", "var", "view", "virtual", "while",
];

/// camelCase identifier from an IRI local name.
pub fn camel(local: &str, upper_first: bool) -> String {
    let mut out = String::new();
    let mut up = upper_first;
    for c in local.chars() {
        if c.is_ascii_alphanumeric() {
            if out.is_empty() && c.is_ascii_digit() {
                out.push('_');
            }
            if up {
                out.extend(c.to_uppercase());
            } else if out.is_empty() && !upper_first {
                out.extend(c.to_lowercase());
            } else {
                out.push(c);
            }
            up = false;
        } else {
            up = !out.is_empty();
        }
    }
    if out.is_empty() {
        out.push('_');
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Mangling {
    pub types: IndexMap<Iri, String>,
    /// Keyed by ADT term, then field term.
    pub fields: IndexMap<Iri, IndexMap<Iri, String>>,
}

impl Mangling {
    pub fn ty(&self, adt: &Iri) -> &str {
        &self.types[adt]
    }

    pub fn field(&self, adt: &Iri, field: &Iri) -> String {
        if field.as_str() == RDF_TYPE {
            return "rdfType".to_string();
        }
        self.fields.get(adt).and_then(|f| f.get(field)).cloned().unwrap_or_else(|| camel(field.local_name(), false))
    }
}

/// Local names camel-cased; collisions and reserved words get a namespace suffix.
pub fn mangle(model: &Model) -> Mangling {
    let mut m = Mangling::default();
    let mut used: HashSet<String> =
        ["RequestData", "Parameter", "Contract1"].iter().map(|s| s.to_string()).collect();
    for adt in &model.adts {
        let mut name = camel(&adt.name, true);
        if used.contains(&name) || RESERVED.contains(&name.as_str()) {
            name = format!("{name}_{}", namespace_tag(&adt.term));
        }
        while used.contains(&name) {
            name.push('_');
        }
        used.insert(name.clone());
        m.types.insert(adt.term.clone(), name);
    }
    for adt in &model.adts {
        let mut used: HashSet<String> = ["id".to_string(), "rdfType".to_string()].into_iter().collect();
        let mut fields = IndexMap::new();
        for f in &adt.fields {
            let mut name = camel(f.term.local_name(), false);
            if used.contains(&name) || RESERVED.contains(&name.as_str()) {
                name = format!("{name}_{}", namespace_tag(&f.term));
            }
            while used.contains(&name) {
                name.push('_');
            }
            used.insert(name.clone());
            fields.insert(f.term.clone(), name);
        }
        m.fields.insert(adt.term.clone(), fields);
    }
    m
}
