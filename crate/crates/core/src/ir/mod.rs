//! Bridge IR: the generated data model plus imperative application logic.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorCode, Result};
use crate::n3::{Iri, RDF_TYPE, XSD_NS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Max {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "*")]
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelType {
    Datatype(Iri),
    /// Reference to a `ModelAdt` by its term.
    Adt(Iri),
}

impl ModelType {
    pub fn adt(&self) -> Option<&Iri> {
        match self {
            ModelType::Adt(i) => Some(i),
            ModelType::Datatype(_) => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ModelType::Datatype(d) if d.local_name() != "string" && d.local_name() != "anyURI")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProperty {
    pub term: Iri,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub max: Max,
    pub value_type: ModelType,
    pub use_dictionary: bool,
    /// Property whose value keys the dictionary (rdf:type).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary_key: Option<Iri>,
    /// Set on inverse fields: values are the entities whose `inverse_of` field points here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inverse_of: Option<Iri>,
}

impl ModelProperty {
    pub fn cardinality(&self) -> &'static str {
        match self.max {
            Max::One => "[0..1]",
            Max::Unbounded => "[0..*]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAdt {
    pub term: Iri,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub fields: Vec<ModelProperty>,
}

impl ModelAdt {
    pub fn field(&self, term: &Iri) -> Option<&ModelProperty> {
        self.fields.iter().find(|f| &f.term == term)
    }

    pub fn field_mut(&mut self, term: &Iri) -> Option<&mut ModelProperty> {
        self.fields.iter_mut().find(|f| &f.term == term)
    }

    pub fn uses_dictionary_fields(&self) -> bool {
        self.fields.iter().any(|f| f.use_dictionary)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub adts: Vec<ModelAdt>,
}

impl Model {
    pub fn adt(&self, term: &Iri) -> Option<&ModelAdt> {
        self.adts.iter().find(|a| &a.term == term)
    }

    pub fn adt_mut(&mut self, term: &Iri) -> Option<&mut ModelAdt> {
        self.adts.iter_mut().find(|a| &a.term == term)
    }

    /// Field of `adt`, treating rdf:type as an implicit field of every ADT.
    pub fn step_field(&self, adt: &Iri, field: &Iri) -> Option<ModelProperty> {
        if field.as_str() == RDF_TYPE {
            return Some(type_field());
        }
        self.adt(adt)?.field(field).cloned()
    }
}

pub fn type_field() -> ModelProperty {
    ModelProperty {
        term: Iri::new(RDF_TYPE),
        name: "type".into(),
        label: None,
        max: Max::One,
        value_type: ModelType::Datatype(Iri(format!("{XSD_NS}anyURI"))),
        use_dictionary: false,
        dictionary_key: None,
        inverse_of: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cmp {
    Equal,
    Exists,
    In,
    Lt,
    Gt,
    Le,
    Ge,
}

impl Cmp {
    pub fn symbol(&self) -> &'static str {
        match self {
            Cmp::Equal => "==",
            Cmp::Exists => "exists",
            Cmp::In => "in",
            Cmp::Lt => "<",
            Cmp::Gt => ">",
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Sum,
    Product,
    Quotient,
    Exponent,
}

impl Operator {
    pub fn symbol(&self) -> &'static str {
        match self {
            Operator::Sum => "+",
            Operator::Product => "*",
            Operator::Quotient => "/",
            Operator::Exponent => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum LiteralValue {
    String(String),
    Integer(i64),
    Decimal(String),
    Iri(Iri),
    List(Vec<LiteralValue>),
}

impl fmt::Display for LiteralValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiteralValue::String(s) => write!(f, "'{s}'"),
            LiteralValue::Integer(i) => write!(f, "{i}"),
            LiteralValue::Decimal(d) => write!(f, "{d}"),
            LiteralValue::Iri(i) => write!(f, "'{}'", i.local_name()),
            LiteralValue::List(items) => {
                let parts: Vec<String> = items.iter().map(|i| i.to_string()).collect();
                write!(f, "({})", parts.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// ADT owning the field.
    pub adt: Iri,
    pub field: Iri,
    pub name: String,
    /// Dictionary access with this key value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<LiteralValue>,
    /// Absent receiver yields absent instead of a dereference fault (key-property comparisons).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub null_safe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Operand {
    Literal { value: LiteralValue },
    Variable { name: String },
    PropertyPath { start: Box<Operand>, steps: Vec<Step> },
    CreateAdt { adt: Iri, arguments: Block },
    Operation { operator: Operator, operands: Vec<Operand> },
}

impl Operand {
    pub fn var(name: &str) -> Self {
        Operand::Variable { name: name.to_string() }
    }

    pub fn lit(value: LiteralValue) -> Self {
        Operand::Literal { value }
    }

    /// Appends a step, extending an existing path or starting one.
    pub fn push(&self, step: Step) -> Self {
        match self {
            Operand::PropertyPath { start, steps } => {
                let mut steps = steps.clone();
                steps.push(step);
                Operand::PropertyPath { start: start.clone(), steps }
            }
            other => Operand::PropertyPath { start: Box::new(other.clone()), steps: vec![step] },
        }
    }

    pub fn steps(&self) -> &[Step] {
        match self {
            Operand::PropertyPath { steps, .. } => steps,
            _ => &[],
        }
    }

    /// The path without its last step (`None` for a non-path).
    pub fn parent(&self) -> Option<Operand> {
        match self {
            Operand::PropertyPath { start, steps } if steps.len() > 1 => {
                Some(Operand::PropertyPath { start: start.clone(), steps: steps[..steps.len() - 1].to_vec() })
            }
            Operand::PropertyPath { start, .. } => Some((**start).clone()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Qualifier {
    Universal,
    Existential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Condition {
    Comparison {
        left: Operand,
        cmp: Cmp,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        right: Option<Operand>,
    },
    CondSet { set: SetKind, members: Vec<Condition> },
    Qualified { qualifier: Qualifier, start: Operand, loop_var: String, inner: Box<Condition> },
}

impl Condition {
    pub fn cmp(left: Operand, cmp: Cmp, right: Operand) -> Self {
        Condition::Comparison { left, cmp, right: Some(right) }
    }

    pub fn exists(left: Operand) -> Self {
        Condition::Comparison { left, cmp: Cmp::Exists, right: None }
    }

    pub fn and(members: Vec<Condition>) -> Self {
        Condition::CondSet { set: SetKind::And, members }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub property: Iri,
    pub name: String,
    pub value: Operand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Statement {
    IfThen {
        condition: Condition,
        then: Block,
    },
    Block(Block),
    Assignment {
        target: Operand,
        value: Operand,
    },
    Iteration {
        start: Operand,
        loop_var: String,
        body: Box<Statement>,
    },
    /// Callback boundary: the rest of the enclosing block runs once per result
    /// (bound to `result`) in callback number `callback`.
    RemoteRequest {
        location: Iri,
        resource_type: Iri,
        select: Vec<Parameter>,
        result: String,
        callback: u32,
    },
    EmitEvent {
        name: String,
        payload: Operand,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: ModelType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Function {
    pub name: String,
    pub params: Vec<Param>,
    pub preamble: Block,
    pub logic: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventDecl {
    pub name: String,
    pub payload: ModelType,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BridgeProgram {
    pub model: Model,
    pub functions: Vec<Function>,
    pub events: Vec<EventDecl>,
}

pub fn serialize(program: &BridgeProgram) -> String {
    let mut s = serde_json::to_string_pretty(program).expect("IR is always serializable");
    s.push('\n');
    s
}

pub fn deserialize(text: &str) -> Result<BridgeProgram> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer: String = e
            .path()
            .iter()
            .filter_map(|seg| match seg {
                serde_path_to_error::Segment::Seq { index } => Some(format!("/{index}")),
                serde_path_to_error::Segment::Map { key } => Some(format!("/{key}")),
                serde_path_to_error::Segment::Enum { variant } => Some(format!("/{variant}")),
                serde_path_to_error::Segment::Unknown => None,
            })
            .collect();
        let pointer = if pointer.is_empty() { "/".to_string() } else { pointer };
        Error::new(ErrorCode::Schema, format!("{pointer}: {}", e.inner()))
    })
}

mod segments;
mod validate;

pub use segments::{request_sites, search_url, RequestSite};
pub use validate::{validate, Diagnostic};
