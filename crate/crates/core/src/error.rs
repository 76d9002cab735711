use std::fmt;

use serde::{Deserialize, Serialize};

use crate::n3::term::Pos;

/// Stable diagnostic codes. The string forms are part of the CLI contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorCode {
    // frontend
    Lex,
    Syntax,
    UnresolvedPrefix,
    Unbalanced,
    AnnotationOnNonRule,
    UnsupportedSyntax,
    UnknownAnnotation,
    RequestLocation,
    // ontology
    OntologySyntax,
    UndeclaredClass,
    NoTypingSource,
    ConflictingTypes,
    LiteralTyping,
    // rule graph
    VariablePredicate,
    Disconnected,
    Cyclic,
    NoFunctionParam,
    MultipleFunctionParams,
    ChainBranch,
    ChainCycle,
    RequestInHead,
    // model / logic
    FieldTypeConflict,
    Unification,
    MissingField,
    RequestWithoutType,
    UnboundRequestValue,
    UnresolvableOperations,
    UnsupportedOperator,
    UnsupportedNesting,
    EventWithoutAdt,
    // IR
    Schema,
    // runtime
    UnguardedDeref,
    DuplicateDictionaryKey,
    FixtureType,
    Runtime,
    // reference evaluator
    OutsideFragment,
}

impl ErrorCode {
    pub fn as_str(&self) -> &'static str {
        use ErrorCode::*;
        match self {
            Lex => "E_LEX",
            Syntax => "E_SYNTAX",
            UnresolvedPrefix => "E_UNRESOLVED_PREFIX",
            Unbalanced => "E_UNBALANCED",
            AnnotationOnNonRule => "E_ANNOTATION_ON_NON_RULE",
            UnsupportedSyntax => "E_UNSUPPORTED_SYNTAX",
            UnknownAnnotation => "E_UNKNOWN_ANNOTATION",
            RequestLocation => "E_REQUEST_LOCATION",
            OntologySyntax => "E_ONTOLOGY_SYNTAX",
            UndeclaredClass => "E_UNDECLARED_CLASS",
            NoTypingSource => "E_NO_TYPING_SOURCE",
            ConflictingTypes => "E_CONFLICTING_TYPES",
            LiteralTyping => "E_LITERAL_TYPING",
            VariablePredicate => "E_VARIABLE_PREDICATE",
            Disconnected => "E_DISCONNECTED",
            Cyclic => "E_CYCLIC",
            NoFunctionParam => "E_NO_FUNCTION_PARAM",
            MultipleFunctionParams => "E_MULTIPLE_FUNCTION_PARAMS",
            ChainBranch => "E_CHAIN_BRANCH",
            ChainCycle => "E_CHAIN_CYCLE",
            RequestInHead => "E_REQUEST_IN_HEAD",
            FieldTypeConflict => "E_FIELD_TYPE_CONFLICT",
            Unification => "E_UNIFICATION",
            MissingField => "E_MISSING_FIELD",
            RequestWithoutType => "E_REQUEST_WITHOUT_TYPE",
            UnboundRequestValue => "E_UNBOUND_REQUEST_VALUE",
            UnresolvableOperations => "E_UNRESOLVABLE_OPERATIONS",
            UnsupportedOperator => "E_UNSUPPORTED_OPERATOR",
            UnsupportedNesting => "E_UNSUPPORTED_NESTING",
            EventWithoutAdt => "E_EVENT_WITHOUT_ADT",
            Schema => "E_SCHEMA",
            UnguardedDeref => "E_UNGUARDED_DEREF",
            DuplicateDictionaryKey => "E_DUPLICATE_DICTIONARY_KEY",
            FixtureType => "E_FIXTURE_TYPE",
            Runtime => "E_RUNTIME",
            OutsideFragment => "E_OUTSIDE_FRAGMENT",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct Error {
    pub code: ErrorCode,
    pub message: String,
    pub pos: Option<Pos>,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pos {
            Some(pos) => write!(f, "{} at {}: {}", self.code, pos, self.message),
            None => write!(f, "{}: {}", self.code, self.message),
        }
    }
}

impl Error {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Error { code, message: message.into(), pos: None }
    }

    pub fn at(code: ErrorCode, pos: Pos, message: impl Into<String>) -> Self {
        Error { code, message: message.into(), pos: Some(pos) }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
