//! Fixture files: a request value tree plus canned oracle answers.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use super::value::{fmt_num, Entity, Store, Value};
use crate::error::{Error, ErrorCode, Result};
use crate::ir::{Max, Model, ModelAdt, ModelType};
use crate::n3::Iri;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub request: Json,
    #[serde(default)]
    pub remote: Vec<RemoteEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteEntry {
    #[serde(rename = "type")]
    pub resource_type: String,
    #[serde(default)]
    pub params: IndexMap<String, Json>,
    #[serde(default)]
    pub results: Vec<Json>,
}

impl Fixture {
    pub fn from_json(text: &str) -> Result<Fixture> {
        serde_json::from_str(text).map_err(|e| Error::new(ErrorCode::FixtureType, format!("fixture: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture is serializable")
    }

    /// Results registered for a request, or an empty list.
    pub fn lookup(&self, resource_type: &Iri, key: &[(String, String)]) -> Vec<&Json> {
        self.remote
            .iter()
            .filter(|r| type_matches(&r.resource_type, resource_type) && canonical_params(&r.params) == key)
            .flat_map(|r| r.results.iter())
            .collect()
    }
}

fn type_matches(name: &str, ty: &Iri) -> bool {
    name == ty.as_str() || name == ty.local_name()
}

/// Lookup key: parameters sorted by name, values rendered as strings.
pub fn canonical_params(params: &IndexMap<String, Json>) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = params.iter().map(|(k, v)| (k.clone(), render_json(v))).collect();
    out.sort();
    out
}

pub fn render_json(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        Json::Number(n) => n.as_f64().map(fmt_num).unwrap_or_else(|| n.to_string()),
        Json::Object(o) => o.get("@id").map(render_json).unwrap_or_else(|| v.to_string()),
        other => other.to_string(),
    }
}

pub(crate) fn find_adt<'m>(model: &'m Model, name: &str) -> Option<&'m ModelAdt> {
    model.adts.iter().find(|a| a.name == name || a.term.as_str() == name)
}

fn type_error(msg: String) -> Error {
    Error::new(ErrorCode::FixtureType, msg)
}

/// Loads a value tree of the given type into the store.
pub struct Loader<'a> {
    pub model: &'a Model,
    pub store: &'a mut Store,
    pub anon: usize,
}

impl<'a> Loader<'a> {
    pub fn new(model: &'a Model, store: &'a mut Store) -> Self {
        let anon = store.entities.len();
        Loader { model, store, anon }
    }

    pub fn load(&mut self, json: &Json, ty: &ModelType, at: &str) -> Result<Value> {
        match ty {
            ModelType::Datatype(d) => literal(json, d, at),
            ModelType::Adt(a) => self.entity(json, a, at),
        }
    }

    fn entity(&mut self, json: &Json, expected: &Iri, at: &str) -> Result<Value> {
        let obj = match json {
            Json::String(s) => return Ok(Value::Iri(Iri::new(s.clone()))),
            Json::Object(o) => o,
            other => return Err(type_error(format!("{at}: expected an object for {}, found {other}", expected.local_name()))),
        };
        let id = obj.get("@id").map(|v| match v {
            Json::String(s) => Ok(s.clone()),
            other => Err(type_error(format!("{at}: @id must be a string, found {other}"))),
        });
        let id = id.transpose()?;
        if obj.len() == 1 {
            if let Some(id) = id {
                return Ok(Value::Iri(Iri::new(id)));
            }
        }
        let class = match obj.get("@type") {
            None => expected.clone(),
            Some(Json::String(t)) => find_adt(self.model, t).map(|a| a.term.clone()).unwrap_or_else(|| Iri::new(t.clone())),
            Some(other) => return Err(type_error(format!("{at}: @type must be a string, found {other}"))),
        };
        let adt = self
            .model
            .adt(&class)
            .filter(|a| !a.fields.is_empty())
            .or_else(|| self.model.adt(expected))
            .ok_or_else(|| type_error(format!("{at}: unknown type {}", expected.local_name())))?
            .clone();
        let id = id.unwrap_or_else(|| {
            self.anon += 1;
            format!("_:f{}", self.anon)
        });
        let mut fields: IndexMap<Iri, Vec<Value>> = IndexMap::new();
        for (k, v) in obj {
            if k.starts_with('@') {
                continue;
            }
            let f = adt
                .fields
                .iter()
                .find(|f| &f.name == k || f.term.as_str() == k)
                .ok_or_else(|| type_error(format!("{at}: {} has no field {k}", adt.name)))?;
            let path = format!("{at}.{k}");
            let vals = match v {
                Json::Array(items) => {
                    if f.max == Max::One && items.len() > 1 {
                        return Err(type_error(format!("{path}: single-valued field holds {} values", items.len())));
                    }
                    let mut out = Vec::new();
                    for (i, item) in items.iter().enumerate() {
                        out.push(self.load(item, &f.value_type, &format!("{path}[{i}]"))?);
                    }
                    out
                }
                Json::Null => Vec::new(),
                single => vec![self.load(single, &f.value_type, &path)?],
            };
            fields.insert(f.term.clone(), vals);
        }
        let e = self.store.insert(Entity { id, class, fields, fresh: false });
        Ok(Value::Entity(e))
    }
}

fn literal(json: &Json, datatype: &Iri, at: &str) -> Result<Value> {
    let dt = datatype.local_name();
    match json {
        Json::String(s) if dt == "anyURI" => Ok(Value::Iri(Iri::new(s.clone()))),
        Json::Object(o) if dt == "anyURI" && o.len() == 1 && o.contains_key("@id") => {
            Ok(Value::Iri(Iri::new(render_json(&o["@id"]))))
        }
        Json::String(s) if ModelType::Datatype(datatype.clone()).is_numeric() => s
            .parse::<f64>()
            .map(Value::Num)
            .map_err(|_| type_error(format!("{at}: expected a number ({dt}), found {s:?}"))),
        Json::String(s) => Ok(Value::Str(s.clone())),
        Json::Number(n) if ModelType::Datatype(datatype.clone()).is_numeric() => Ok(Value::Num(n.as_f64().unwrap_or(f64::NAN))),
        Json::Bool(b) => Ok(Value::Str(b.to_string())),
        other => Err(type_error(format!("{at}: expected {dt}, found {other}"))),
    }
}
