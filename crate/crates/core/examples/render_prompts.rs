//! The exact prompts a remote model receives for a small request.

use logitext::oracle::{build_propose_prompt, build_verify_prompt, OracleRequest, TargetedConstraint};
use logitext::{parse_document, Assignment};

const DOC: &str = include_str!("../fixtures/disruptive_policy.lt");

fn main() {
    let doc = parse_document(DOC).unwrap();
    let constraints: Vec<TargetedConstraint> = ["C1", "C3", "C4"]
        .iter()
        .map(|id| TargetedConstraint {
            nltc: doc.nltc(id).unwrap().clone(),
            target: *id != "C4",
        })
        .collect();

    let propose = OracleRequest::propose("M", constraints.clone(), Assignment::new()).unwrap();
    let p = build_propose_prompt(&propose);
    println!("=== propose system\n{}\n\n=== propose user\n{}", p.system, p.user);

    let verify = OracleRequest::verify(
        Some("M".into()),
        constraints,
        Assignment::new(),
        "They are all the same.",
    )
    .unwrap();
    let v = build_verify_prompt(&verify);
    println!("=== verify user\n{}", v.user);
}
