//! Classify a fixed message: every text constraint is judged by the oracle
//! and the definitions are propagated to the verdict.
//!
//! cargo run --example classify_message [-- "message text"]

use logitext::check::Checker;
use logitext::oracle::{OracleScript, ScriptedOracle};
use logitext::theory::NlCache;
use logitext::{parse_document, Assignment, CheckStatus, SolverConfig};

const DOC: &str = include_str!("../fixtures/disruptive_policy.lt");
const RULES: &str = include_str!("../fixtures/classify_rules.json");

fn main() {
    let message = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "Americans love ice cream.".into());
    let doc = parse_document(DOC).unwrap();
    let oracle = ScriptedOracle::new(OracleScript::from_json(RULES).unwrap());
    let config = SolverConfig::default();
    let cache = NlCache::in_memory();

    let outcome = Checker::new(&doc, &config, &oracle, &cache)
        .classify(&Assignment::new().with("M", message.as_str()))
        .unwrap();
    match &outcome.status {
        CheckStatus::Sat(a) => {
            for v in ["C1", "C2", "C3", "C4", "C5", "d"] {
                println!("{v:>3} = {}", a.get_bool(v).unwrap());
            }
            let verdict = if a.get_bool("d") == Some(true) {
                "disruptive"
            } else {
                "not disruptive"
            };
            println!("{message:?} is {verdict}");
        }
        other => println!("{other:?}"),
    }
    println!("{} verify calls", outcome.diagnostics.verify_calls);
}
