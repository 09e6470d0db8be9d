//! All-solutions enumeration over the logical part of a document,
//! projected onto a few variables.

use logitext::logic::SolverSession;
use logitext::{parse_document, Assignment};

const DOC: &str = include_str!("../fixtures/disruptive_policy.lt");

fn main() {
    let doc = parse_document(DOC).unwrap();
    let mut session = SolverSession::new(&doc.formulas, doc.bool_vars.iter().map(String::as_str)).unwrap();
    session.freeze(&Assignment::new().with("d", true)).unwrap();
    session.set_projection(["C3", "C4", "C5"]).unwrap();

    let models = session.enumerate_models(None);
    println!("{} combinations of C3, C4, C5 make d true:", models.len());
    for m in &models {
        let bit = |v| if m.get_bool(v) == Some(true) { 1 } else { 0 };
        println!("  C3={} C4={} C5={}", bit("C3"), bit("C4"), bit("C5"));
    }
}
