//! Score a subject's transcript: whole-prompt versus clause-wise accuracy,
//! and how many valid combinations it found compared to the solver.

use std::collections::BTreeMap;

use logitext::gaps::{gap_report, Transcript};
use logitext::parse_document;

const DOC: &str = include_str!("../fixtures/disruptive_policy.lt");
const LABELS: &str = include_str!("../fixtures/gaps/labels.json");
const TRANSCRIPT: &str = include_str!("../fixtures/gaps/transcript.json");

fn main() {
    let doc = parse_document(DOC).unwrap();
    let labels: BTreeMap<String, bool> = serde_json::from_str(LABELS).unwrap();
    let transcript: Transcript = serde_json::from_str(TRANSCRIPT).unwrap();
    let report = gap_report(&doc, None, &labels, &transcript, None).unwrap();

    if let Some(c) = &report.compositional {
        println!(
            "target {}: a = {:.2}, a* = {:.2}, delta = {:+.2}",
            c.target, c.a, c.a_star, c.delta
        );
    }
    if let Some(c) = &report.combinatorial {
        for s in &c.instances {
            println!("{}: found {} of {} combinations", s.id, s.n, s.n_star);
        }
        println!("delta prime = {:.4}", c.delta_prime.unwrap_or(f64::NAN));
    }
    print!("\n{}", report.to_csv());
}
