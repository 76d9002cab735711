use kgsc_core::compile::compile;
use kgsc_core::examples::{INSURANCE_ONTOLOGY, INSURANCE_RULES};
use kgsc_core::ir::*;
use kgsc_core::logic::LogicOptions;
use kgsc_core::n3::Iri;
use kgsc_core::ErrorCode;

fn running_example() -> BridgeProgram {
    compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, LogicOptions::default()).unwrap().program
}

fn find_iteration(stmts: &mut [Statement]) -> Option<&mut Statement> {
    for s in stmts {
        match s {
            Statement::Iteration { .. } => return Some(s),
            Statement::IfThen { then, .. } | Statement::Block(then) => {
                if let Some(x) = find_iteration(&mut then.statements) {
                    return Some(x);
                }
            }
            _ => {}
        }
    }
    None
}

#[test]
fn running_example_is_valid() {
    assert_eq!(validate(&running_example()), Vec::<Diagnostic>::new());
}

#[test]
fn step_through_non_field() {
    let mut p = running_example();
    let Some(Statement::Iteration { start, .. }) = find_iteration(&mut p.functions[0].logic) else { panic!() };
    let Operand::PropertyPath { steps, .. } = start else { panic!() };
    steps[0].field = Iri::new("http://hl7.org/fhir/nothing");
    steps[0].name = "nothing".into();
    let d = validate(&p);
    assert!(d.iter().any(|d| d.code == ErrorCode::MissingField && d.message.contains("nothing")), "{d:?}");
}

#[test]
fn iteration_over_single_valued_field() {
    let mut p = running_example();
    let Some(Statement::Iteration { start, .. }) = find_iteration(&mut p.functions[0].logic) else { panic!() };
    let Operand::PropertyPath { steps, .. } = start else { panic!() };
    steps[0].field = Iri::new("http://example.org/insurance#immunoTherapyItem");
    steps[0].name = "immunoTherapyItem".into();
    let d = validate(&p);
    assert!(d.iter().any(|d| d.message.contains("multi-valued")), "{d:?}");
}

#[test]
fn serde_round_trip() {
    let p = running_example();
    let text = serialize(&p);
    assert_eq!(deserialize(&text).unwrap(), p);
    assert_eq!(serialize(&deserialize(&text).unwrap()), text);
}

#[test]
fn empty_program_round_trip() {
    let p = BridgeProgram::default();
    assert_eq!(deserialize(&serialize(&p)).unwrap(), p);
    assert!(validate(&p).is_empty());
}

#[test]
fn unknown_statement_variant() {
    let text = r#"{"model":{"adts":[]},"functions":[{"name":"process","params":[],
        "preamble":{"statements":[]},"logic":[{"kind":"goto","label":"x"}]}],"events":[]}"#;
    let e = deserialize(text).unwrap_err();
    assert_eq!(e.code, ErrorCode::Schema);
    let msg = e.to_string();
    assert!(msg.contains("goto"), "{msg}");
    assert!(msg.contains("/functions/0/logic/0"), "{msg}");
}

#[test]
fn search_url_for_coverage_request() {
    let url = search_url(
        &Iri::new("http://myfhir.ca/"),
        &Iri::new("http://hl7.org/fhir/Coverage"),
        &[("policyHolder".into(), "pat1".into()), ("status".into(), "active".into())],
    )
    .unwrap();
    assert_eq!(url, "http://myfhir.ca/Coverage/_search?policyHolder=pat1&status=active");
}

#[test]
fn bad_request_location() {
    let e = search_url(&Iri::new("not a url"), &Iri::new("http://hl7.org/fhir/Coverage"), &[]).unwrap_err();
    assert_eq!(e.code, ErrorCode::RequestLocation);
}

#[test]
fn callback_segments_of_running_example() {
    let p = running_example();
    let sites = request_sites(&p.functions[0]).unwrap();
    let types: Vec<_> = sites.iter().map(|s| (s.callback, s.resource_type.local_name().to_string())).collect();
    assert_eq!(types, [(1, "Claim".to_string()), (2, "Coverage".to_string())]);
    assert_eq!(sites[0].select.len(), 1);
    assert_eq!(sites[0].select[0].name, "subject");
}

#[test]
fn no_request_means_no_segments() {
    let p = compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, LogicOptions { requests: false }).unwrap().program;
    assert!(request_sites(&p.functions[0]).unwrap().is_empty());
    assert_eq!(p.functions.len(), 1);
}
