mod common;

use common::{compile_files, normalize};
use kgsc_core::adt::generate_adts;
use kgsc_core::backend::*;
use kgsc_core::compile::compile;
use kgsc_core::examples::{INSURANCE_ONTOLOGY, INSURANCE_RULES};
use kgsc_core::ir::*;
use kgsc_core::logic::LogicOptions;
use kgsc_core::n3::Iri;

const PREFIXES: &str = "@prefix fhir: <http://hl7.org/fhir/> .
@prefix : <http://example.org/insurance#> .
@prefix cg: <https://w3id.org/kgsc/cg#> .
@prefix math: <http://www.w3.org/2000/10/swap/math#> .
";

fn program(rules: &str, requests: bool) -> BridgeProgram {
    compile(&format!("{PREFIXES}{rules}"), INSURANCE_ONTOLOGY, LogicOptions { requests }).unwrap().program
}

fn pseudo(p: &BridgeProgram) -> String {
    emit_pseudocode(p, PseudoOptions::default())
}

#[test]
fn one_edge_rule_gives_one_adt() {
    let c = compile(
        &format!("{PREFIXES}{{ ?req fhir:purpose 'validation' }} => {{ ?req :checked 'yes' }} ; cg:functionParam ?req ."),
        INSURANCE_ONTOLOGY,
        LogicOptions::default(),
    )
    .unwrap();
    let model = generate_adts(&c.graphs, &c.ontology).unwrap();
    assert_eq!(model.adts.len(), 1);
    let purpose = model.adts[0].field(&Iri::new("http://hl7.org/fhir/purpose")).unwrap();
    assert_eq!(purpose.value_type, ModelType::Datatype(Iri::new("http://www.w3.org/2001/XMLSchema#string")));
}

#[test]
fn request_fields_are_merged_across_rules() {
    let p = compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, LogicOptions::default()).unwrap().program;
    let cer = p.model.adts.iter().find(|a| a.name == "CoverageEligibilityRequest").unwrap();
    let names: Vec<_> = cer.fields.iter().map(|f| f.name.as_str()).collect();
    // purpose and item come from the first rule, patient from the second
    assert!(names.contains(&"purpose") && names.contains(&"item") && names.contains(&"patient"), "{names:?}");
}

#[test]
fn claim_head_unifies_with_body_path() {
    // subjectOf is multi-valued, so the claim is bound by iterating over it
    let p = compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, LogicOptions { requests: false }).unwrap().program;
    let out = normalize(&pseudo(&p));
    assert!(out.contains("for each claim in req.patient.subjectOf do"), "{out}");
    assert!(out.contains("req.immunoTherapyItem.eligibleTransplant=claim.procedure"), "{out}");
}

#[test]
fn single_triple_rule() {
    let p = program("{ ?req fhir:purpose 'validation' } => { } ; cg:functionParam ?req .", true);
    let logic = &p.functions[0].logic;
    assert_eq!(logic.len(), 1);
    let Statement::IfThen { condition, then } = &logic[0] else { panic!("{logic:?}") };
    assert!(then.statements.is_empty());
    let Condition::Comparison { cmp, right, .. } = condition else { panic!("{condition:?}") };
    assert_eq!(*cmp, Cmp::Equal);
    assert_eq!(right, &Some(Operand::lit(LiteralValue::String("validation".into()))));
}

#[test]
fn coverage_request_select() {
    let p = program(
        "{ ?req fhir:patient ?p .
           { ?cov a fhir:Coverage . ?cov fhir:policyHolder ?p ; fhir:status 'active' } cg:request <http://myfhir.ca/> .
           ?cov fhir:insurer :Medicare .
         } => { ?req fhir:purpose 'covered' } ; cg:functionParam ?req .",
        true,
    );
    let sites = request_sites(&p.functions[0]).unwrap();
    assert_eq!(sites.len(), 1);
    assert_eq!(sites[0].resource_type.local_name(), "Coverage");
    let names: Vec<_> = sites[0].select.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["policyHolder", "status"]);
}

#[test]
fn concrete_operands_fold_into_preamble() {
    let c = compile_files("bmi.n3", "bmi.ttl", true).unwrap();
    assert!(!c.program.functions[0].preamble.statements.is_empty());
    let text = "@prefix : <http://example.org/health#> . @prefix math: <http://www.w3.org/2000/10/swap/math#> .
        @prefix cg: <https://w3id.org/kgsc/cg#> .
        { ?p :weight ?w . (3 4) math:sum ?s . ?w math:greaterThan ?s } => { ?p :category 'heavy' } ; cg:functionParam ?p .";
    let c = kgsc_core::compile::compile(text, &common::read("rules/bmi.ttl"), LogicOptions::default()).unwrap();
    let out = normalize(&pseudo(&c.program));
    assert!(out.starts_with("s=3 + 4"), "{out}");
}

#[test]
fn unused_ontology_classes_leave_model_unchanged() {
    let base = compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, LogicOptions::default()).unwrap();
    let junk = format!(
        "{INSURANCE_ONTOLOGY}\n<http://junk.org/A> a <http://www.w3.org/2002/07/owl#Class> .\n\
         <http://junk.org/p> <http://www.w3.org/2000/01/rdf-schema#domain> <http://junk.org/A> .\n"
    );
    let other = compile(INSURANCE_RULES, &junk, LogicOptions::default()).unwrap();
    assert_eq!(base.program, other.program);
}

fn prop(term: &str, name: &str, max: Max, ty: ModelType, dict: bool) -> ModelProperty {
    ModelProperty {
        term: Iri::new(term),
        name: name.into(),
        label: None,
        max,
        value_type: ty,
        use_dictionary: dict,
        dictionary_key: dict.then(|| Iri::new(kgsc_core::n3::RDF_TYPE)),
        inverse_of: None,
    }
}

fn adt(term: &str, fields: Vec<ModelProperty>) -> ModelAdt {
    ModelAdt { term: Iri::new(term), name: Iri::new(term).local_name().into(), label: None, fields }
}

fn step(adt: &str, field: &str, name: &str) -> Step {
    Step { adt: Iri::new(adt), field: Iri::new(field), name: name.into(), key: None, null_safe: false }
}

const E: &str = "http://e.org/";

fn nested_dictionary_program() -> BridgeProgram {
    let ty = |l: &str| ModelType::Adt(Iri::new(format!("{E}{l}")));
    let model = Model {
        adts: vec![
            adt(&format!("{E}Patient"), vec![prop(&format!("{E}profile"), "profile", Max::One, ty("PatientProfile"), false)]),
            adt(
                &format!("{E}PatientProfile"),
                vec![prop(&format!("{E}hasDemographic"), "hasDemographic", Max::Unbounded, ty("Demographic"), true)],
            ),
            adt(&format!("{E}Demographic"), vec![]),
        ],
    };
    let mut path = Operand::var("p").push(step(&format!("{E}Patient"), &format!("{E}profile"), "profile"));
    path = path.push(Step {
        key: Some(LiteralValue::String("Age".into())),
        ..step(&format!("{E}PatientProfile"), &format!("{E}hasDemographic"), "hasDemographic")
    });
    BridgeProgram {
        model,
        functions: vec![Function {
            name: "process".into(),
            params: vec![Param { name: "p".into(), ty: ty("Patient") }],
            preamble: Block::default(),
            logic: vec![Statement::IfThen { condition: Condition::exists(path), then: Block::default() }],
        }],
        events: vec![],
    }
}

#[test]
fn nested_dictionary_is_flattened() {
    let flat = flatten_mapping_structs(&nested_dictionary_program());
    let patient = flat.program.model.adt(&Iri::new(format!("{E}Patient"))).unwrap();
    let names: Vec<_> = patient.fields.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["hasDemographic"]);
    assert_eq!(flat.rewrites.len(), 1);
    let Statement::IfThen { condition: Condition::Comparison { left, .. }, .. } = &flat.program.functions[0].logic[0] else {
        panic!()
    };
    let steps: Vec<_> = left.steps().iter().map(|s| s.name.as_str()).collect();
    assert_eq!(steps, ["hasDemographic"]);
}

#[test]
fn model_without_dictionaries_is_unchanged() {
    let p = compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, LogicOptions::default()).unwrap().program;
    let flat = flatten_mapping_structs(&p);
    assert_eq!(flat.program, p);
    assert!(flat.rewrites.is_empty());
}

#[test]
fn same_field_name_in_two_nested_dictionaries() {
    let mut p = nested_dictionary_program();
    let ty = |l: &str| ModelType::Adt(Iri::new(format!("{E}{l}")));
    p.model.adts[0].fields.push(prop(&format!("{E}history"), "history", Max::One, ty("History"), false));
    p.model.adts.push(adt(
        &format!("{E}History"),
        vec![prop(&format!("{E}hasDemographic"), "hasDemographic", Max::Unbounded, ty("Demographic"), true)],
    ));
    let flat = flatten_mapping_structs(&p);
    let patient = flat.program.model.adt(&Iri::new(format!("{E}Patient"))).unwrap();
    let mut names: Vec<_> = patient.fields.iter().map(|f| f.name.clone()).collect();
    names.sort();
    assert_eq!(names.len(), 2);
    assert_ne!(names[0], names[1]);
    assert_eq!(flat.rewrites.len(), 2);
}

fn running_solidity() -> SolidityOutput {
    let p = compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, LogicOptions::default()).unwrap().program;
    emit_solidity(&p, &SolidityOptions::default()).unwrap()
}

#[test]
fn contract_functions_and_events() {
    let out = running_solidity();
    for f in ["process", "callback1", "callback2"] {
        assert!(out.manifest.functions.contains(&f.to_string()));
        assert!(out.source.contains(&format!("function {f}(")));
    }
    assert_eq!(out.manifest.events, ["OracleRequest", "Response"]);
    assert!(out.source.len() < MAX_CONTRACT_SIZE);
    assert_eq!(check_solidity(&out.source), vec![]);
}

#[test]
fn response_event_emission() {
    let src = running_solidity().source;
    assert!(src.contains("request: req.immunoTherapyItem, outcome: \"complete\""), "{src}");
    assert!(src.contains("emit Response(v);"));
    assert!(src.contains("emit OracleRequest(RequestData(req, \"Claim\", parameters, \"callback1\"));"));
    assert!(src.contains("function callback1(CoverageEligibilityRequest memory req, Claim[] memory data)"));
    assert!(src.contains("function callback2(CoverageEligibilityRequest memory req, Coverage[] memory data)"));
}

#[test]
fn existential_check_function() {
    let c = compile_files("item_existential.n3", "fhir_multi_medication.ttl", true).unwrap();
    let src = emit_solidity(&c.program, &SolidityOptions::default()).unwrap().source;
    let body = src.split("function check1").nth(1).expect("check1 emitted");
    assert!(body.contains("== keccak256(bytes(\"DBCAT005063\"))) {\n                return true;"));
    assert!(body.contains("return false;"));
}

#[test]
fn universal_check_function() {
    let mut c = compile_files("item_existential.n3", "fhir_multi_medication.ttl", true).unwrap();
    fn flip(stmts: &mut [Statement]) {
        for s in stmts {
            match s {
                Statement::IfThen { condition, then } => {
                    flip_cond(condition);
                    flip(&mut then.statements);
                }
                Statement::Iteration { body, .. } => flip(std::slice::from_mut(body.as_mut())),
                _ => {}
            }
        }
    }
    fn flip_cond(c: &mut Condition) {
        match c {
            Condition::Qualified { qualifier, .. } => *qualifier = Qualifier::Universal,
            Condition::CondSet { members, .. } => members.iter_mut().for_each(flip_cond),
            _ => {}
        }
    }
    flip(&mut c.program.functions[0].logic);
    assert!(pseudo(&c.program).contains("for all med in item.medication holds that"), "{}", pseudo(&c.program));
    let src = emit_solidity(&c.program, &SolidityOptions::default()).unwrap().source;
    let body = src.split("function check1").nth(1).unwrap();
    assert!(body.contains("!(keccak256(bytes(med.concept)) == keccak256(bytes(\"DBCAT005063\")))"), "{body}");
    let fail = body.find("return false;").unwrap();
    let pass = body.find("return true;").unwrap();
    assert!(fail < pass);
}

#[test]
fn no_checks_without_qualified_conditions() {
    let c = compile_files("ddo_code8.n3", "ddo.ttl", true).unwrap();
    let src = emit_solidity(&c.program, &SolidityOptions::default()).unwrap().source;
    assert!(!src.contains("function check"));
}

#[test]
fn dictionary_root_lives_in_storage() {
    let c = compile_files("ddo_code8.n3", "ddo.ttl", true).unwrap();
    let src = emit_solidity(&c.program, &SolidityOptions::default()).unwrap().source;
    assert!(src.contains("mapping(string => PhysicalExamination) hasPhysicalExamination;"));
    assert!(src.contains("Patient storage profile = patientStore[profileId];"));
    assert!(src.contains("hasPhysicalExamination[\"http://purl.obolibrary.org/obo/DDO.owl#BMI\"].hasQualitativeValue >= 23"));
    assert!(check_solidity(&src).is_empty());
}

#[test]
fn empty_program_contract() {
    let out = emit_solidity(&BridgeProgram::default(), &SolidityOptions::default()).unwrap();
    assert!(out.manifest.functions.is_empty());
    assert!(check_solidity(&out.source).is_empty(), "{}", out.source);
}

#[test]
fn grammar_check_flags_unbounded_loops() {
    let src = "pragma solidity ^0.8.19;\ncontract C { function f() public { while (true) {} } }";
    assert!(!check_solidity(src).is_empty());
    assert!(!check_solidity("contract C { function f() public { ").is_empty());
}
