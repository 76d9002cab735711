//! Compiles restricted existential N3 decision rules into a bridge IR and Solidity,
//! with an interpreter and an independent forward-chaining evaluator for checking the output.

pub mod adt;
pub mod backend;
pub mod compile;
pub mod error;
pub mod graph;
pub mod interp;
pub mod ir;
pub mod logic;
pub mod n3;
pub mod ontology;

pub use error::{Error, ErrorCode, Result};

/// Bundled running example: insurance ontology and rules.
pub mod examples {
    pub const INSURANCE_ONTOLOGY: &str = include_str!("../data/insurance.ttl");
    pub const INSURANCE_RULES: &str = include_str!("../data/insurance.n3");
}
