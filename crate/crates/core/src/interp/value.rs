//! Runtime values and the entity store shared by the interpreter and the fixture loader.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::n3::Iri;

pub type EntityId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Num(f64),
    Iri(Iri),
    Entity(EntityId),
}

/// Canonical number rendering: integral values without a fractional part.
pub fn fmt_num(n: f64) -> String {
    if n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub id: String,
    pub class: Iri,
    pub fields: IndexMap<Iri, Vec<Value>>,
    /// Created by the program rather than loaded from data.
    pub fresh: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Store {
    pub entities: Vec<Entity>,
    index: HashMap<String, EntityId>,
    fresh_count: usize,
}

impl Store {
    pub fn get(&self, id: EntityId) -> &Entity {
        &self.entities[id]
    }

    pub fn get_mut(&mut self, id: EntityId) -> &mut Entity {
        &mut self.entities[id]
    }

    pub fn by_id(&self, id: &str) -> Option<EntityId> {
        self.index.get(id).copied()
    }

    /// Adds an entity, merging field values into an existing entity with the same id.
    pub fn insert(&mut self, e: Entity) -> EntityId {
        if let Some(&existing) = self.index.get(&e.id) {
            let target = &mut self.entities[existing];
            for (k, vs) in e.fields {
                let slot = target.fields.entry(k).or_default();
                for v in vs {
                    if !slot.contains(&v) {
                        slot.push(v);
                    }
                }
            }
            return existing;
        }
        let id = self.entities.len();
        self.index.insert(e.id.clone(), id);
        self.entities.push(e);
        id
    }

    pub fn create(&mut self, class: Iri) -> EntityId {
        self.fresh_count += 1;
        let e = Entity { id: format!("_:new{}", self.fresh_count), class, fields: IndexMap::new(), fresh: true };
        self.insert(e)
    }

    /// Entity standing behind a value: the entity itself or an IRI naming a stored entity.
    pub fn resolve(&self, v: &Value) -> Option<EntityId> {
        match v {
            Value::Entity(e) => Some(*e),
            Value::Iri(i) => self.by_id(i.as_str()),
            _ => None,
        }
    }

    /// Identity used for comparisons: entity id or IRI.
    pub fn identity<'a>(&'a self, v: &'a Value) -> Option<&'a str> {
        match v {
            Value::Entity(e) => Some(&self.entities[*e].id),
            Value::Iri(i) => Some(i.as_str()),
            _ => None,
        }
    }

    pub fn equal(&self, a: &Value, b: &Value) -> bool {
        match (a, b) {
            (Value::Str(x), Value::Str(y)) => x == y,
            (Value::Num(x), Value::Num(y)) => x == y,
            _ => match (self.identity(a), self.identity(b)) {
                (Some(x), Some(y)) => x == y,
                _ => false,
            },
        }
    }

    /// String form used for remote lookup keys.
    pub fn render(&self, v: &Value) -> String {
        match v {
            Value::Str(s) => s.clone(),
            Value::Num(n) => fmt_num(*n),
            Value::Iri(i) => i.as_str().to_string(),
            Value::Entity(e) => self.entities[*e].id.clone(),
        }
    }
}

/// Event payload tree, comparable across the interpreter and the naive evaluator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Node {
        #[serde(rename = "@type")]
        class: Option<Iri>,
        fields: IndexMap<Iri, Vec<Payload>>,
    },
    Ref {
        #[serde(rename = "@id")]
        id: String,
    },
    Str(String),
    Num(f64),
}

impl Payload {
    /// Deterministic text form with sorted fields and values (for multiset comparison).
    pub fn canonical(&self) -> String {
        match self {
            Payload::Str(s) => format!("{s:?}"),
            Payload::Num(n) => fmt_num(*n),
            Payload::Ref { id } => format!("<{id}>"),
            Payload::Node { class, fields } => {
                let mut parts: Vec<String> = fields
                    .iter()
                    .map(|(k, vs)| {
                        let mut vals: Vec<String> = vs.iter().map(|v| v.canonical()).collect();
                        vals.sort();
                        format!("<{}>=[{}]", k.as_str(), vals.join(","))
                    })
                    .collect();
                parts.sort();
                let c = class.as_ref().map_or("?".to_string(), |c| c.as_str().to_string());
                format!("[{c} {}]", parts.join(" "))
            }
        }
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl Store {
    /// Payload of a value: program-created entities expand to nodes, others become references.
    pub fn payload(&self, v: &Value) -> Payload {
        match v {
            Value::Str(s) => Payload::Str(s.clone()),
            Value::Num(n) => Payload::Num(*n),
            Value::Iri(i) => Payload::Ref { id: i.as_str().to_string() },
            Value::Entity(e) => {
                let ent = &self.entities[*e];
                if !ent.fresh {
                    return Payload::Ref { id: ent.id.clone() };
                }
                let fields = ent
                    .fields
                    .iter()
                    .filter(|(_, vs)| !vs.is_empty())
                    .map(|(k, vs)| (k.clone(), vs.iter().map(|x| self.payload(x)).collect()))
                    .collect();
                Payload::Node { class: Some(ent.class.clone()), fields }
            }
        }
    }
}
