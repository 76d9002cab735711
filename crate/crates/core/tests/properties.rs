mod common;

use common::props::*;
use kgsc_core::compile::compile;
use kgsc_core::examples::{INSURANCE_ONTOLOGY, INSURANCE_RULES};
use kgsc_core::ir::*;
use kgsc_core::logic::LogicOptions;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

const CASES: u32 = 256;

proptest! {
    #![proptest_config(ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn exists_guards_precede_dereferences(text in rule_strategy()) {
        prop_guards(&text)?;
    }

    #[test]
    fn property_paths_are_well_typed(text in rule_strategy()) {
        prop_well_typed(&text)?;
    }

    #[test]
    fn reordered_example_is_valid_and_guarded(keys in prop::collection::vec(any::<u32>(), 32)) {
        let text = shuffled_example(&keys);
        let c = compile_ok(&text).unwrap();
        prop_assert_eq!(c.program.functions.len(), 1);
        prop_guards(&text)?;
        prop_well_typed(&text)?;
    }

    #[test]
    fn serialization_round_trips(text in rule_strategy()) {
        prop_round_trip(&text)?;
    }

    #[test]
    fn compilation_is_deterministic(text in rule_strategy()) {
        prop_deterministic(&text)?;
    }

    #[test]
    fn junk_ontology_classes_do_not_change_adts(text in rule_strategy(), junk in junk_strategy()) {
        prop_adt_minimal(&text, &junk)?;
    }
}

#[test]
fn guard_checker_detects_missing_guard() {
    let mut c = compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, LogicOptions::default()).unwrap();
    assert!(unguarded(&c.program).is_empty());
    fn strip(stmts: &mut [Statement]) {
        for s in stmts {
            if let Statement::IfThen { condition: Condition::CondSet { members, .. }, then } = s {
                members.retain(|m| !matches!(m, Condition::Comparison { cmp: Cmp::Exists, .. }));
                strip(&mut then.statements);
            }
        }
    }
    strip(&mut c.program.functions[0].logic);
    assert!(!unguarded(&c.program).is_empty());
}

#[test]
fn random_rules_mostly_compile() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let strategy = rule_strategy();
    let mut ok = 0;
    for _ in 0..200 {
        let text = strategy.new_tree(&mut runner).unwrap().current();
        ok += usize::from(compile_ok(&text).is_some());
    }
    assert!(ok >= 150, "{ok}/200 compiled");
}
