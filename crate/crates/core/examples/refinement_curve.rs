//! Success rate of the propose/verify loop against a noisy scripted oracle
//! as the refinement budget grows.
//!
//! cargo run --release --example refinement_curve [-- trials]

use logitext::oracle::{OracleScript, ScriptedOracle};
use logitext::theory::{nlsolve, NlCache};
use logitext::{parse_document, Assignment, SolverConfig, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DOC: &str = include_str!("../fixtures/disruptive_policy.lt");
const RULES: &str = include_str!("../fixtures/disruptive_rules.json");

fn main() {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let doc = parse_document(DOC).unwrap();
    let nltcs: Vec<_> = doc.nltcs.iter().filter(|n| n.reads("M")).cloned().collect();
    let script = OracleScript::from_json(RULES).unwrap();

    println!("noise    T=1    T=2    T=3    T=4    T=5");
    for p in [0.0, 0.1, 0.3] {
        let mut row = format!("{p:<5}");
        for t in 1..=5 {
            let config = SolverConfig {
                max_refinements: t,
                ..SolverConfig::default()
            };
            let solved = (0..trials)
                .filter(|&trial| {
                    let mut rng = ChaCha8Rng::seed_from_u64(trial);
                    let pi: Assignment = nltcs
                        .iter()
                        .map(|n| (n.out_var.clone(), Value::Bool(rng.random_bool(0.5))))
                        .collect();
                    let oracle = ScriptedOracle::new(script.clone()).with_noise(p, trial);
                    nlsolve("M", &nltcs, &pi, &oracle, &config, &NlCache::in_memory())
                        .unwrap()
                        .is_some()
                })
                .count();
            row += &format!("  {:.3}", solved as f64 / trials as f64);
        }
        println!("{row}");
    }
}
