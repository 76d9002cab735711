//! End-to-end pipeline: N3 rules plus ontology to a validated bridge program.

use crate::adt::generate_adts;
use crate::error::{Error, Result};
use crate::graph::{build_rule_graph, order_rule_chain, RuleGraph};
use crate::ir::{validate, BridgeProgram};
use crate::logic::{generate_program, LogicOptions};
use crate::n3::{extract_rules, parse_document};
use crate::ontology::{load_ontology, Ontology};

#[derive(Debug, Clone)]
pub struct Compilation {
    pub ontology: Ontology,
    /// Rule graphs in chain order.
    pub graphs: Vec<RuleGraph>,
    pub program: BridgeProgram,
}

pub fn compile(rules: &str, ontology: &str, opts: LogicOptions) -> Result<Compilation> {
    let ontology = load_ontology(ontology)?;
    compile_with(rules, ontology, opts)
}

pub fn compile_with(rules: &str, ontology: Ontology, opts: LogicOptions) -> Result<Compilation> {
    let doc = parse_document(rules)?;
    let rules = extract_rules(&doc)?;
    let graphs = rules
        .iter()
        .map(|r| build_rule_graph(r, &ontology).map(|(g, _)| g))
        .collect::<Result<Vec<_>>>()?;
    let graphs = order_rule_chain(graphs)?;
    let model = generate_adts(&graphs, &ontology)?;
    let program = generate_program(&graphs, &model, &ontology, opts)?;
    if let Some(d) = validate(&program).into_iter().next() {
        return Err(Error::new(d.code, format!("generated program is invalid at {}: {}", d.at, d.message)));
    }
    Ok(Compilation { ontology, graphs, program })
}
