//! Generate one message that is disruptive only through stereotyping.

use logitext::check::{verify_all, Checker};
use logitext::oracle::{OracleScript, ScriptedOracle};
use logitext::theory::NlCache;
use logitext::trace::Trace;
use logitext::{parse_document, Assignment, SolverConfig};

const DOC: &str = include_str!("../fixtures/disruptive_policy.lt");
const RULES: &str = include_str!("../fixtures/disruptive_rules.json");

fn main() {
    let doc = parse_document(DOC).unwrap();
    let oracle = ScriptedOracle::new(OracleScript::from_json(RULES).unwrap());
    let config = SolverConfig::default();
    let cache = NlCache::in_memory();
    let trace = Trace::in_memory();

    let pi = Assignment::new().with("C4", false).with("C5", false).with("d", true);
    let outcome = Checker::new(&doc, &config, &oracle, &cache)
        .with_trace(Some(&trace))
        .check(&pi)
        .unwrap();
    let total = outcome.assignment().expect("satisfiable");
    println!("M = {:?}", total.get_str("M").unwrap());
    println!("C3 = {}", total.get_bool("C3").unwrap());

    let mismatches = verify_all(&doc, total, &oracle)
        .unwrap()
        .iter()
        .filter(|j| !j.matches())
        .count();
    println!("re-verified: {mismatches} mismatches");
    println!("\ntrace:");
    for e in trace.events() {
        println!("  {}", serde_json::to_string(&e).unwrap());
    }
}
