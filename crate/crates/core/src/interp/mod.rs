//! Execution of bridge programs and a naive forward-chaining evaluator used as an oracle.

pub mod compare;
pub mod exec;
pub mod fixture;
pub mod gen;
pub mod naive;
pub mod value;

pub use compare::{compare_outcomes, Comparison};
pub use exec::{execute_contract, Transcript, TranscriptEntry};
pub use fixture::{Fixture, RemoteEntry};
pub use gen::{generate_fixture, FixtureGenerator};
pub use naive::{fixture_triples, naive_rule_eval, EventRecord, Fact, InferenceSet, Node};
pub use value::{Payload, Store, Value};

use crate::compile::Compilation;
use crate::error::Result;

/// Runs the contract and the naive evaluator on one fixture and compares their events.
pub fn oracle_check(comp: &Compilation, fixture: &Fixture) -> Result<(Transcript, InferenceSet, Comparison)> {
    let transcript = execute_contract(&comp.program, fixture)?;
    let entry = comp.program.functions[0].params[0].ty.clone();
    let data = fixture_triples(&comp.program.model, &entry, fixture)?;
    let rules: Vec<_> = comp.graphs.iter().map(|g| g.rule.clone()).collect();
    let inf = naive_rule_eval(&rules, &comp.ontology, &data)?;
    let cmp = compare_outcomes(&transcript, &inf);
    Ok((transcript, inf, cmp))
}
