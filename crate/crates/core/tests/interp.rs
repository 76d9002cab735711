mod common;

use common::read;
use kgsc_core::compile::{compile, Compilation};
use kgsc_core::examples::{INSURANCE_ONTOLOGY, INSURANCE_RULES};
use kgsc_core::interp::*;
use kgsc_core::logic::LogicOptions;
use kgsc_core::n3::{extract_rules, parse_document};
use kgsc_core::ontology::load_ontology;

fn running_example() -> Compilation {
    compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, LogicOptions::default()).unwrap()
}

fn fixture(name: &str) -> Fixture {
    Fixture::from_json(&read(&format!("fixtures/{name}.json"))).unwrap()
}

fn edit(name: &str, f: impl FnOnce(&mut serde_json::Value)) -> Fixture {
    let mut v: serde_json::Value = serde_json::from_str(&read(&format!("fixtures/{name}.json"))).unwrap();
    f(&mut v);
    Fixture::from_json(&v.to_string()).unwrap()
}

#[test]
fn eligible_fixture_message_flow() {
    let c = running_example();
    let t = execute_contract(&c.program, &fixture("eligible")).unwrap();
    assert_eq!(
        t.shape(),
        [
            "FunctionEntered(process)",
            "RemoteRequested(Claim)",
            "CallbackInvoked(callback1)",
            "RemoteRequested(Coverage)",
            "CallbackInvoked(callback2)",
            "EventEmitted(Response)",
        ]
    );
    let events = t.events();
    assert_eq!(events.len(), 1);
    let payload = events[0].1.canonical();
    assert!(payload.contains("outcome>=[\"complete\"]"), "{payload}");
    assert!(payload.contains("request>=[<http://example.org/data#med1>]"), "{payload}");
}

#[test]
fn remote_requests_carry_search_urls() {
    let c = running_example();
    let lines = execute_contract(&c.program, &fixture("eligible")).unwrap().to_json_lines();
    assert!(lines.contains("http://myfhir.ca/Claim/_search?subject=http%3A%2F%2Fexample.org%2Fdata%23pat1"));
    assert!(lines.contains("http://myfhir.ca/Coverage/_search?"));
    assert!(lines.contains("status=active"));
}

#[test]
fn part_a_coverage_yields_no_response() {
    let c = running_example();
    let fx = edit("eligible", |v| {
        v["remote"][1]["results"][0]["class"] = serde_json::json!({"@id": "http://example.org/insurance#PartA"})
    });
    let (t, inf, cmp) = oracle_check(&c, &fx).unwrap();
    assert!(t.events().is_empty());
    assert!(inf.events.is_empty());
    assert_eq!(t.shape().iter().filter(|s| s.starts_with("RemoteRequested")).count(), 2);
    assert!(cmp.is_match());
}

#[test]
fn empty_item_list_stops_at_entry() {
    let c = running_example();
    let fx = edit("eligible", |v| v["request"]["item"] = serde_json::json!([]));
    let t = execute_contract(&c.program, &fx).unwrap();
    assert_eq!(t.shape(), ["FunctionEntered(process)"]);
}

#[test]
fn naive_inferences_on_eligible_fixture() {
    let c = running_example();
    let (_, inf, cmp) = oracle_check(&c, &fixture("eligible")).unwrap();
    let text = format!("{:?}", inf.inferred);
    assert!(text.contains("immunoTherapyItem"));
    assert!(text.contains("eligibleTransplant"));
    assert_eq!(inf.events.len(), 1);
    assert_eq!(cmp.report(), "MATCH");
}

#[test]
fn empty_dataset_infers_nothing() {
    let c = running_example();
    let rules: Vec<_> = c.graphs.iter().map(|g| g.rule.clone()).collect();
    let inf = naive_rule_eval(&rules, &c.ontology, &[]).unwrap();
    assert!(inf.inferred.is_empty());
    assert!(inf.events.is_empty());
}

#[test]
fn keyed_exam_threshold() {
    let ont = load_ontology(&read("rules/ddo.ttl")).unwrap();
    let rules = extract_rules(&parse_document(&read("rules/ddo_code8.n3")).unwrap()).unwrap();
    let ddo = "http://purl.obolibrary.org/obo/DDO.owl#";
    let iri = |l: &str| Node::Iri(format!("{ddo}{l}"));
    let data = |value: &str| -> Vec<Fact> {
        vec![
            (Node::Iri("http://example.org/data#p".into()), iri("has_physical_examination"), Node::Iri("http://example.org/data#e".into())),
            (Node::Iri("http://example.org/data#e".into()), Node::Iri(kgsc_core::n3::RDF_TYPE.into()), iri("BMI")),
            (Node::Iri("http://example.org/data#e".into()), iri("has_qualitative_value"), Node::Num(value.into())),
        ]
    };
    assert_eq!(naive_rule_eval(&rules, &ont, &data("25")).unwrap().inferred.len(), 1);
    assert!(naive_rule_eval(&rules, &ont, &data("22")).unwrap().inferred.is_empty());
}

#[test]
fn spurious_event_is_reported() {
    let c = running_example();
    let t = execute_contract(&c.program, &fixture("eligible")).unwrap();
    let cmp = compare_outcomes(&t, &InferenceSet::default());
    assert!(!cmp.is_match());
    assert_eq!(cmp.extra.len(), 1);
    assert!(cmp.report().starts_with("MISMATCH\n  extra: Response"));
}

#[test]
fn empty_outcomes_match() {
    assert!(compare_outcomes(&Transcript::default(), &InferenceSet::default()).is_match());
}

#[test]
fn hand_built_fixtures_match_naive_evaluation() {
    let c = running_example();
    let mut with_events = 0;
    for i in 1..=10 {
        let (t, inf, cmp) = oracle_check(&c, &fixture(&format!("case{i:02}"))).unwrap();
        assert!(cmp.is_match(), "case{i:02}: {}", cmp.report());
        assert_eq!(t.events().len(), inf.events.len());
        with_events += usize::from(!inf.events.is_empty());
    }
    // The suite must exercise both outcomes.
    assert!(with_events > 0 && with_events < 10);
}

#[test]
fn random_fixtures_running_example() {
    let c = running_example();
    for seed in 0..100 {
        let fx = generate_fixture(&c, seed).unwrap();
        let (_, _, cmp) = oracle_check(&c, &fx).unwrap();
        assert!(cmp.is_match(), "seed {seed}: {}\n{}", cmp.report(), fx.to_json());
    }
}

#[test]
fn fixture_generation_is_seeded() {
    let c = running_example();
    assert_eq!(generate_fixture(&c, 7).unwrap().to_json(), generate_fixture(&c, 7).unwrap().to_json());
}

#[test]
fn array_on_single_valued_field_is_rejected() {
    let c = running_example();
    let fx = edit("eligible", |v| {
        v["request"]["purpose"] = serde_json::json!(["validation", "discovery"])
    });
    let e = execute_contract(&c.program, &fx).unwrap_err();
    assert_eq!(e.code, kgsc_core::ErrorCode::FixtureType);
}
