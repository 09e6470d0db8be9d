//! Parse a document and show what the solver will see.
//!
//! cargo run --example parse_policy [-- path/to/doc.lt]

use logitext::parse_document;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/disruptive_policy.lt").into());
    let src = std::fs::read_to_string(&path).expect("readable document");
    let doc = match parse_document(&src) {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("{path}: {e}");
            std::process::exit(1);
        }
    };
    for w in &doc.warnings {
        eprintln!("warning: {}", w.message);
    }

    println!("strings: {:?}", doc.string_vars);
    println!("booleans: {:?}", doc.bool_vars);
    println!("\nformulas:");
    for f in &doc.formulas {
        println!("  {f}");
    }
    println!("\ntext constraints:");
    for n in &doc.nltcs {
        let deps: Vec<&str> = n.dep_vars().collect();
        println!("  {} <- {:?} reads {deps:?}", n.out_var, n.clause);
    }
}
