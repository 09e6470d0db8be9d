//! One disruptive message per valid combination of criteria, optionally with
//! some combinations refused by the oracle.
//!
//! cargo run --example cover_combinations [-- fixtures/refusal_rules.json]

use logitext::check::Checker;
use logitext::oracle::{OracleScript, ScriptedOracle};
use logitext::theory::NlCache;
use logitext::trace::{BlockReason, Trace, TraceEvent};
use logitext::{parse_document, Assignment, SolverConfig};

const DOC: &str = include_str!("../fixtures/disruptive_policy.lt");

fn main() {
    let rules = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/disruptive_rules.json").into());
    let doc = parse_document(DOC).unwrap();
    let oracle = ScriptedOracle::new(OracleScript::load(rules.as_ref()).unwrap());
    let config = SolverConfig {
        cover: true,
        ..SolverConfig::default()
    };
    let cache = NlCache::in_memory();
    let trace = Trace::in_memory();

    let out = Checker::new(&doc, &config, &oracle, &cache)
        .with_trace(Some(&trace))
        .cover(&Assignment::new().with("d", true))
        .unwrap();
    println!("projection {:?}", out.projection);
    for a in &out.solutions {
        let combo: Vec<String> = ["C3", "C4", "C5"]
            .iter()
            .map(|v| format!("{v}={}", a.get_bool(v).unwrap()))
            .collect();
        println!("  {}  {:?}", combo.join(" "), a.get_str("M").unwrap());
    }
    let refused = trace
        .events()
        .iter()
        .filter(|e| {
            matches!(
                e,
                TraceEvent::Block {
                    reason: BlockReason::Nlsolve,
                    ..
                }
            )
        })
        .count();
    println!(
        "{} results, {refused} combinations the oracle could not realize, {:?}",
        out.solutions.len(),
        out.status
    );
}
