//! Lightweight ontology: classes, property domains/ranges, cardinality, inverses, keys.

use std::collections::BTreeSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorCode, Result};
use crate::n3::{parse_document, Iri, Literal, TermKind, OWL_NS, RDFS_NS, RDF_TYPE, XSD_NS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PropertyKind {
    Object,
    Datatype,
    Unspecified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyInfo {
    pub iri: Iri,
    pub kind: PropertyKind,
    pub domain: Option<Iri>,
    pub range: Option<Iri>,
    pub functional: bool,
    pub max_cardinality: Option<u32>,
    pub inverse_of: Option<Iri>,
    pub label: Option<String>,
    /// Set for inverses derived by the `<local>Of` naming fallback.
    pub synthetic: bool,
}

impl PropertyInfo {
    fn empty(iri: Iri) -> Self {
        PropertyInfo {
            iri,
            kind: PropertyKind::Unspecified,
            domain: None,
            range: None,
            functional: false,
            max_cardinality: None,
            inverse_of: None,
            label: None,
            synthetic: false,
        }
    }

    /// `None` means unbounded.
    pub fn effective_max(&self) -> Option<u32> {
        if self.functional {
            Some(self.max_cardinality.map_or(1, |m| m.min(1)))
        } else {
            self.max_cardinality
        }
    }

    pub fn is_multi_valued(&self) -> bool {
        !matches!(self.effective_max(), Some(0 | 1))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeRef {
    Class(Iri),
    Datatype(Iri),
}

impl TypeRef {
    pub fn iri(&self) -> &Iri {
        match self {
            TypeRef::Class(i) | TypeRef::Datatype(i) => i,
        }
    }

    pub fn is_class(&self) -> bool {
        matches!(self, TypeRef::Class(_))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Ontology {
    pub classes: BTreeSet<Iri>,
    pub class_labels: IndexMap<Iri, String>,
    pub properties: IndexMap<Iri, PropertyInfo>,
    /// `owl:hasKey` declarations (class → key properties).
    pub keys: IndexMap<Iri, Vec<Iri>>,
    pub warnings: Vec<String>,
}

/// Typing evidence for one rule term.
#[derive(Debug, Clone, Default)]
pub struct NodeContext<'a> {
    pub explicit_types: Vec<&'a Iri>,
    pub incoming: Vec<&'a Iri>,
    pub outgoing: Vec<&'a Iri>,
    pub literal: Option<&'a Literal>,
}

pub fn is_datatype(iri: &Iri) -> bool {
    iri.as_str().starts_with(XSD_NS)
}

pub fn load_ontology(text: &str) -> Result<Ontology> {
    let doc = parse_document(text).map_err(|e| Error { code: ErrorCode::OntologySyntax, ..e })?;
    if let Some(r) = doc.rules.first() {
        return Err(Error::at(ErrorCode::OntologySyntax, r.pos, "rules are not allowed in an ontology"));
    }
    let owl = |l: &str| format!("{OWL_NS}{l}");
    let rdfs = |l: &str| format!("{RDFS_NS}{l}");
    let mut ont = Ontology::default();
    let mut label_of: Vec<(Iri, String)> = Vec::new();
    for t in &doc.ground_triples {
        let (Some(s), Some(p)) = (t.subject.as_iri(), t.predicate_iri()) else {
            ont.warnings.push(format!("{}: ignored triple with non-IRI subject or predicate", t.pos));
            continue;
        };
        let p = p.as_str();
        let obj_iri = t.object.as_iri();
        if p == RDF_TYPE {
            let Some(o) = obj_iri else {
                ont.warnings.push(format!("{}: ignored rdf:type with non-IRI object", t.pos));
                continue;
            };
            match o.as_str() {
                x if x == owl("Class") || x == rdfs("Class") => {
                    ont.classes.insert(s.clone());
                }
                x if x == owl("ObjectProperty") => ont.prop(s).kind = PropertyKind::Object,
                x if x == owl("DatatypeProperty") => ont.prop(s).kind = PropertyKind::Datatype,
                x if x == owl("FunctionalProperty") => ont.prop(s).functional = true,
                _ => ont.warnings.push(format!("{}: ignored rdf:type {}", t.pos, o)),
            }
        } else if p == rdfs("domain") || p == rdfs("range") {
            let Some(o) = obj_iri else {
                return Err(Error::at(ErrorCode::OntologySyntax, t.object.pos, "domain/range must be an IRI"));
            };
            let info = ont.prop(s);
            if p == rdfs("domain") {
                info.domain = Some(o.clone());
            } else {
                info.range = Some(o.clone());
            }
        } else if p == owl("inverseOf") {
            let Some(o) = obj_iri else {
                return Err(Error::at(ErrorCode::OntologySyntax, t.object.pos, "owl:inverseOf must name a property"));
            };
            ont.prop(s).inverse_of = Some(o.clone());
            ont.prop(o).inverse_of = Some(s.clone());
        } else if p == rdfs("label") {
            match &t.object.kind {
                TermKind::Literal(Literal::String(l)) => label_of.push((s.clone(), l.clone())),
                _ => return Err(Error::at(ErrorCode::OntologySyntax, t.object.pos, "rdfs:label must be a string")),
            }
        } else if p == owl("maxCardinality") || p == owl("cardinality") {
            match &t.object.kind {
                TermKind::Literal(Literal::Integer(n)) if *n >= 0 => ont.prop(s).max_cardinality = Some(*n as u32),
                _ => {
                    return Err(Error::at(
                        ErrorCode::OntologySyntax,
                        t.object.pos,
                        "cardinality must be a nonnegative integer",
                    ))
                }
            }
        } else if p == owl("hasKey") {
            match &t.object.kind {
                TermKind::List(items) if items.iter().all(|i| i.as_iri().is_some()) => {
                    ont.keys.insert(s.clone(), items.iter().filter_map(|i| i.as_iri().cloned()).collect());
                }
                _ => return Err(Error::at(ErrorCode::OntologySyntax, t.object.pos, "owl:hasKey expects a list of properties")),
            }
        } else {
            ont.warnings.push(format!("{}: ignored predicate <{}>", t.pos, p));
        }
    }
    for (s, l) in label_of {
        if let Some(info) = ont.properties.get_mut(&s) {
            info.label = Some(l);
        } else {
            ont.class_labels.insert(s, l);
        }
    }
    for info in ont.properties.values() {
        for c in info.domain.iter().chain(info.range.iter()) {
            if !ont.classes.contains(c) && !is_datatype(c) {
                return Err(Error::new(
                    ErrorCode::UndeclaredClass,
                    format!("property {} references undeclared class {}", info.iri, c),
                ));
            }
        }
    }
    for cls in ont.keys.keys() {
        if !ont.classes.contains(cls) {
            return Err(Error::new(ErrorCode::UndeclaredClass, format!("owl:hasKey on undeclared class {cls}")));
        }
    }
    Ok(ont)
}

impl Ontology {
    fn prop(&mut self, iri: &Iri) -> &mut PropertyInfo {
        self.properties.entry(iri.clone()).or_insert_with(|| PropertyInfo::empty(iri.clone()))
    }

    pub fn is_class(&self, iri: &Iri) -> bool {
        self.classes.contains(iri)
    }

    /// Declared inverse if any, otherwise `<local>Of` in the same namespace.
    pub fn inverse_of(&self, prop: &Iri) -> Iri {
        match self.properties.get(prop).and_then(|p| p.inverse_of.clone()) {
            Some(inv) => inv,
            None => Iri(format!("{}{}Of", prop.namespace(), prop.local_name())),
        }
    }

    pub fn is_synthetic_inverse(&self, prop: &Iri) -> bool {
        self.properties.get(prop).and_then(|p| p.inverse_of.as_ref()).is_none()
    }

    /// Property information including inverses synthesized from their originals.
    pub fn property(&self, iri: &Iri) -> PropertyInfo {
        if let Some(p) = self.properties.get(iri) {
            return p.clone();
        }
        if let Some(base) = iri.as_str().strip_suffix("Of") {
            let base = Iri::new(base);
            if let Some(orig) = self.properties.get(&base) {
                if orig.inverse_of.is_none() {
                    return PropertyInfo {
                        iri: iri.clone(),
                        kind: PropertyKind::Object,
                        domain: orig.range.clone(),
                        range: orig.domain.clone(),
                        functional: false,
                        max_cardinality: None,
                        inverse_of: Some(base),
                        label: None,
                        synthetic: true,
                    };
                }
            }
        }
        PropertyInfo::empty(iri.clone())
    }

    pub fn is_declared(&self, iri: &Iri) -> bool {
        self.properties.contains_key(iri)
    }

    /// The single `owl:hasKey` property of a class, if declared.
    pub fn key_property(&self, class: &Iri) -> Option<&Iri> {
        match self.keys.get(class) {
            Some(k) if k.len() == 1 => Some(&k[0]),
            _ => None,
        }
    }

    fn as_type(&self, iri: &Iri) -> Option<TypeRef> {
        if self.classes.contains(iri) {
            Some(TypeRef::Class(iri.clone()))
        } else if is_datatype(iri) {
            Some(TypeRef::Datatype(iri.clone()))
        } else {
            None
        }
    }

    /// Resolution priority: explicit rdf:type > incoming range > outgoing domain.
    /// Every available source must agree.
    pub fn type_of_node(&self, ctx: &NodeContext) -> Result<TypeRef> {
        if let Some(lit) = ctx.literal {
            return Ok(TypeRef::Datatype(lit.datatype()));
        }
        let mut candidates: Vec<(TypeRef, String)> = Vec::new();
        for t in &ctx.explicit_types {
            if self.classes.contains(*t) {
                candidates.push((TypeRef::Class((*t).clone()), format!("rdf:type {}", t.local_name())));
            }
        }
        for p in &ctx.incoming {
            if let Some(r) = self.property(p).range.and_then(|r| self.as_type(&r)) {
                candidates.push((r, format!("range of {}", p.local_name())));
            }
        }
        for p in &ctx.outgoing {
            if let Some(d) = self.property(p).domain.and_then(|d| self.as_type(&d)) {
                candidates.push((d, format!("domain of {}", p.local_name())));
            }
        }
        let Some((first, why)) = candidates.first() else {
            return Err(Error::new(ErrorCode::NoTypingSource, "no rdf:type, range, or domain determines the type"));
        };
        if let Some((other, why2)) = candidates.iter().find(|(c, _)| c != first) {
            return Err(Error::new(
                ErrorCode::ConflictingTypes,
                format!(
                    "conflicting types {} ({}) and {} ({})",
                    first.iri().local_name(),
                    why,
                    other.iri().local_name(),
                    why2
                ),
            ));
        }
        Ok(first.clone())
    }
}
