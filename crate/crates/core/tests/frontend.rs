mod common;

use kgsc_core::compile::compile;
use kgsc_core::examples::{INSURANCE_ONTOLOGY, INSURANCE_RULES};
use kgsc_core::graph::{build_rule_graph, order_rule_chain, Clause, RuleGraph};
use kgsc_core::logic::LogicOptions;
use kgsc_core::n3::{canonicalize_blanks, extract_rules, parse_document, pretty_print, Iri, TermKind};
use kgsc_core::ontology::{load_ontology, NodeContext, TypeRef};
use kgsc_core::ErrorCode;

const FHIR: &str = "http://hl7.org/fhir/";

/// Prefix header and the individual rules of the running example.
fn split_rules() -> (String, Vec<String>) {
    let mut parts = INSURANCE_RULES.split("\n\n");
    let header = parts.next().unwrap().to_string();
    (header, parts.map(str::to_string).collect())
}

fn rule_doc(indices: &[usize]) -> String {
    let (header, rules) = split_rules();
    let mut s = header;
    for i in indices {
        s.push_str("\n\n");
        s.push_str(&rules[*i]);
    }
    s
}

fn graphs(text: &str) -> Vec<RuleGraph> {
    let ont = load_ontology(INSURANCE_ONTOLOGY).unwrap();
    let rules = extract_rules(&parse_document(text).unwrap()).unwrap();
    rules.iter().map(|r| build_rule_graph(r, &ont).unwrap().0).collect()
}

#[test]
fn first_rule_shape() {
    let rules = extract_rules(&parse_document(&rule_doc(&[0])).unwrap()).unwrap();
    assert_eq!(rules.len(), 1);
    assert_eq!(rules[0].body.len(), 5);
    assert_eq!(rules[0].head.len(), 1);
    assert_eq!(rules[0].function_params, ["req"]);
}

#[test]
fn empty_document() {
    let doc = parse_document("").unwrap();
    assert!(doc.rules.is_empty() && doc.ground_triples.is_empty());
}

#[test]
fn existential_head_with_event() {
    let rules = extract_rules(&parse_document(&rule_doc(&[2])).unwrap()).unwrap();
    assert!(matches!(rules[0].head[0].subject.kind, TermKind::BlankNode(_)));
    assert_eq!(rules[0].event_name.as_deref(), Some("Response"));
}

#[test]
fn request_annotation_on_third_rule() {
    let rules = extract_rules(&parse_document(INSURANCE_RULES).unwrap()).unwrap();
    assert_eq!(rules.len(), 3);
    assert_eq!(rules[2].requests.len(), 1);
    assert_eq!(rules[2].requests[0].location.as_iri().unwrap().as_str(), "http://myfhir.ca/");
}

#[test]
fn ground_triples_only() {
    let doc = parse_document("@prefix : <http://e.org/> . :a :b :c .").unwrap();
    assert!(extract_rules(&doc).unwrap().is_empty());
    assert_eq!(doc.ground_triples.len(), 1);
}

#[test]
fn unknown_annotation_is_rejected() {
    let text = "@prefix : <http://e.org/> . @prefix cg: <https://w3id.org/kgsc/cg#> .\n\
                { ?x :p 1 } => { ?x :q 2 } ; cg:foo 1 ; cg:functionParam ?x .";
    let e = extract_rules(&parse_document(text).unwrap()).unwrap_err();
    assert_eq!(e.code, ErrorCode::UnknownAnnotation);
    assert!(e.to_string().contains("foo"), "{e}");
}

#[test]
fn pretty_print_round_trip() {
    let doc = parse_document(INSURANCE_RULES).unwrap();
    let once = pretty_print(&canonicalize_blanks(&doc));
    let again = parse_document(&once).unwrap();
    assert_eq!(pretty_print(&canonicalize_blanks(&again)), once);
    assert_eq!(again.rules.len(), 3);
}

#[test]
fn ontology_with_inverse_pair() {
    let text = "@prefix owl: <http://www.w3.org/2002/07/owl#> .
        @prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
        @prefix fhir: <http://hl7.org/fhir/> .
        fhir:Patient a owl:Class . fhir:Coverage a owl:Class .
        fhir:policyHolder a owl:ObjectProperty ; rdfs:domain fhir:Coverage ; rdfs:range fhir:Patient ;
            owl:inverseOf fhir:policyHolderOf .";
    let ont = load_ontology(text).unwrap();
    assert_eq!(ont.classes.len(), 2);
    assert_eq!(ont.properties.len(), 2);
    let p = Iri::new(format!("{FHIR}policyHolder"));
    assert_eq!(ont.inverse_of(&ont.inverse_of(&p)), p);
}

#[test]
fn empty_ontology() {
    let ont = load_ontology("").unwrap();
    assert!(ont.classes.is_empty() && ont.properties.is_empty());
}

#[test]
fn functional_means_single_valued() {
    let ont = load_ontology(
        "@prefix owl: <http://www.w3.org/2002/07/owl#> . @prefix : <http://e.org/> . :p a owl:FunctionalProperty .",
    )
    .unwrap();
    assert_eq!(ont.property(&Iri::new("http://e.org/p")).effective_max(), Some(1));
}

#[test]
fn node_typing_sources() {
    let ont = load_ontology(INSURANCE_ONTOLOGY).unwrap();
    let patient = Iri::new(format!("{FHIR}patient"));
    let ctx = NodeContext { incoming: vec![&patient], ..Default::default() };
    assert_eq!(ont.type_of_node(&ctx).unwrap(), TypeRef::Class(Iri::new(format!("{FHIR}Patient"))));
    let claim = Iri::new(format!("{FHIR}Claim"));
    let ctx = NodeContext { explicit_types: vec![&claim], ..Default::default() };
    assert_eq!(ont.type_of_node(&ctx).unwrap(), TypeRef::Class(claim.clone()));
    let lit = kgsc_core::n3::Literal::String("active".into());
    let ctx = NodeContext { literal: Some(&lit), ..Default::default() };
    assert!(matches!(ont.type_of_node(&ctx).unwrap(), TypeRef::Datatype(d) if d.local_name() == "string"));
}

#[test]
fn inverse_naming() {
    let ont = load_ontology(INSURANCE_ONTOLOGY).unwrap();
    let inv = |l: &str| ont.inverse_of(&Iri::new(format!("{FHIR}{l}"))).local_name().to_string();
    assert_eq!(inv("policyHolder"), "policyHolderOf");
    assert_eq!(inv("subject"), "subjectOf");
    let declared = load_ontology(
        "@prefix owl: <http://www.w3.org/2002/07/owl#> . @prefix ex: <http://e.org/> . ex:parentOf owl:inverseOf ex:childOf .",
    )
    .unwrap();
    assert_eq!(declared.inverse_of(&Iri::new("http://e.org/parentOf")).local_name(), "childOf");
}

#[test]
fn coverage_rule_graph() {
    let g = &graphs(&rule_doc(&[2]))[0];
    assert_eq!(g.param(), "req");
    let label = |i: usize| g.edges[i].property.local_name().to_string();
    let body: Vec<_> = (0..g.edges.len()).filter(|i| g.edges[*i].clause == Clause::Body).collect();
    let inverted: Vec<_> = body.iter().filter(|i| g.edges[**i].original.is_some()).collect();
    assert_eq!(inverted.len(), 1);
    let e = &g.edges[*inverted[0]];
    assert_eq!(label(*inverted[0]), "policyHolderOf");
    assert_eq!(e.request.as_ref().unwrap().as_str(), "http://myfhir.ca/");
    let cov = e.target;
    let mut props: Vec<_> = g.out_edges(cov).map(|e| e.property.local_name().to_string()).collect();
    props.sort();
    for p in ["status", "insurer", "class"] {
        assert!(props.iter().any(|x| x == p), "{props:?}");
    }
}

#[test]
fn claim_rule_inverts_subject() {
    let g = &graphs(&rule_doc(&[1]))[0];
    assert!(g.edges.iter().any(|e| e.property.local_name() == "subjectOf" && e.original.is_some()));
}

#[test]
fn variable_predicate_is_rejected() {
    let ont = load_ontology(INSURANCE_ONTOLOGY).unwrap();
    let text = "@prefix cg: <https://w3id.org/kgsc/cg#> . @prefix : <http://e.org/> .
        { ?x ?p ?y } => { ?x :q ?y } ; cg:functionParam ?x .";
    let err = match extract_rules(&parse_document(text).unwrap()) {
        Ok(rules) => build_rule_graph(&rules[0], &ont).unwrap_err(),
        Err(e) => e,
    };
    assert_eq!(err.code, ErrorCode::VariablePredicate);
}

#[test]
fn chain_order_is_input_independent() {
    for order in [[2, 0, 1], [1, 2, 0], [0, 1, 2], [2, 1, 0]] {
        let ordered = order_rule_chain(graphs(&rule_doc(&order))).unwrap();
        let heads: Vec<_> = ordered
            .iter()
            .map(|g| g.rule.event_name.clone().unwrap_or_else(|| g.rule.head[0].predicate_iri().unwrap().local_name().into()))
            .collect();
        assert_eq!(heads, ["immunoTherapyItem", "eligibleTransplant", "Response"]);
    }
}

#[test]
fn single_rule_chain() {
    assert_eq!(order_rule_chain(graphs(&rule_doc(&[0]))).unwrap().len(), 1);
}

#[test]
fn mutually_dependent_rules() {
    let text = "@prefix cg: <https://w3id.org/kgsc/cg#> . @prefix fhir: <http://hl7.org/fhir/> .
        { ?r fhir:purpose ?x } => { ?r fhir:status ?x } ; cg:functionParam ?r .
        { ?r fhir:status ?x } => { ?r fhir:purpose ?x } ; cg:functionParam ?r .";
    let e = compile(text, INSURANCE_ONTOLOGY, LogicOptions::default()).unwrap_err();
    assert!(matches!(e.code, ErrorCode::ChainCycle | ErrorCode::ChainBranch), "{e}");
}

#[test]
fn dot_output_is_deterministic() {
    let a: Vec<String> = graphs(INSURANCE_RULES).iter().map(|g| g.to_dot()).collect();
    let b: Vec<String> = graphs(INSURANCE_RULES).iter().map(|g| g.to_dot()).collect();
    assert_eq!(a, b);
    assert!(a[2].contains("policyHolderOf (inverse of policyHolder)"), "{}", a[2]);
}
