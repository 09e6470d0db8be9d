//! Generate a message with a hosted chat model instead of the scripted oracle.
//!
//! LOGITEXT_API_KEY=... cargo run --example remote_oracle
//! LOGITEXT_ENDPOINT and LOGITEXT_MODEL override the defaults.

use logitext::check::Checker;
use logitext::oracle::{RemoteConfig, RemoteOracle};
use logitext::theory::NlCache;
use logitext::{parse_document, Assignment, SolverConfig};

const DOC: &str = include_str!("../fixtures/disruptive_policy.lt");

fn main() {
    env_logger::init();
    let mut config = RemoteConfig::default();
    if let Ok(endpoint) = std::env::var("LOGITEXT_ENDPOINT") {
        config.endpoint = endpoint;
    }
    if let Ok(model) = std::env::var("LOGITEXT_MODEL") {
        config.model = model;
    }
    let oracle = match RemoteOracle::new(config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };

    let doc = parse_document(DOC).unwrap();
    let solver = SolverConfig::default();
    let cache = NlCache::in_memory();
    let pi = Assignment::new().with("C4", false).with("C5", false).with("d", true);
    let out = Checker::new(&doc, &solver, &oracle, &cache).check(&pi).unwrap();
    match out.assignment() {
        Some(a) => println!("{}", a.get_str("M").unwrap()),
        None => println!("{:?}", out.status),
    }
    eprintln!("{} oracle calls", out.diagnostics.oracle_calls);
}
