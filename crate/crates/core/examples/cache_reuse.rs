//! A persistent cache turns a repeated generation into a lookup.

use logitext::check::Checker;
use logitext::oracle::{OracleScript, ScriptedOracle};
use logitext::theory::NlCache;
use logitext::{parse_document, Assignment, SolverConfig};

const DOC: &str = include_str!("../fixtures/disruptive_policy.lt");
const RULES: &str = include_str!("../fixtures/disruptive_rules.json");

fn main() {
    let doc = parse_document(DOC).unwrap();
    let oracle = ScriptedOracle::new(OracleScript::from_json(RULES).unwrap());
    let config = SolverConfig::default();
    let path = std::env::temp_dir().join(format!("logitext-cache-{}.jsonl", std::process::id()));
    let pi = Assignment::new().with("C4", false).with("C5", false).with("d", true);

    for run in ["cold", "warm"] {
        let cache = NlCache::open(&path).unwrap();
        let out = Checker::new(&doc, &config, &oracle, &cache).check(&pi).unwrap();
        let d = &out.diagnostics;
        println!(
            "{run}: {} oracle calls ({} propose, {} verify), {} cache hits, {} entries on disk",
            d.oracle_calls,
            d.propose_calls,
            d.verify_calls,
            d.cache_hits,
            cache.len()
        );
    }
    let _ = std::fs::remove_file(&path);
}
