//! Compiles the bundled insurance rules and checks them against random fixtures.
//!
//! cargo run -p kgsc-core --example running_example -- 100

use kgsc_core::backend::{emit_pseudocode, PseudoOptions};
use kgsc_core::compile::compile;
use kgsc_core::examples::{INSURANCE_ONTOLOGY, INSURANCE_RULES};
use kgsc_core::interp::{generate_fixture, oracle_check};
use kgsc_core::logic::LogicOptions;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(100);
    let c = compile(INSURANCE_RULES, INSURANCE_ONTOLOGY, LogicOptions::default())?;
    print!("{}", emit_pseudocode(&c.program, PseudoOptions::full()));
    let (mut matched, mut events) = (0, 0);
    for seed in 0..n {
        let fx = generate_fixture(&c, seed)?;
        let (t, _, cmp) = oracle_check(&c, &fx)?;
        events += t.events().len();
        if cmp.is_match() {
            matched += 1;
        } else {
            println!("seed {seed}: {}", cmp.report());
        }
    }
    println!("{matched}/{n} fixtures match, {events} events emitted");
    Ok(())
}
