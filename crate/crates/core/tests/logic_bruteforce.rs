mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::RandomDoc;
use logitext::logic::SolverSession;
use logitext::parse_document;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn projected(models: &[logitext::Assignment], projection: &[String]) -> Vec<BTreeMap<String, bool>> {
    models
        .iter()
        .map(|m| projection.iter().map(|v| (v.clone(), m.get_bool(v).unwrap())).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn enumeration_matches_truth_tables(seed in any::<u64>(), mask in any::<u16>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let doc = RandomDoc::generate(&mut rng, 8);
        let parsed = parse_document(&doc.source).unwrap();
        let proj_idx: Vec<usize> = (0..doc.vars).filter(|i| mask >> i & 1 == 1).collect();
        let proj: Vec<String> = proj_idx.iter().map(|&i| RandomDoc::name(i)).collect();

        let mut s = SolverSession::new(&parsed.formulas, parsed.bool_vars.iter().map(String::as_str)).unwrap();
        s.set_projection(proj.iter().map(String::as_str)).unwrap();
        let models = s.enumerate_models(None);
        let got = projected(&models, &proj);
        let unique: BTreeSet<_> = got.iter().cloned().collect();
        prop_assert_eq!(unique.len(), got.len());
        prop_assert_eq!(unique, doc.brute_force(&proj_idx));
        for m in &models {
            for f in &parsed.formulas {
                prop_assert!(f.eval(m).unwrap());
            }
        }
    }

    #[test]
    fn frozen_values_are_respected(seed in any::<u64>(), var in 0usize..8, value in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let doc = RandomDoc::generate(&mut rng, 8);
        let var = var % doc.vars;
        let parsed = parse_document(&doc.source).unwrap();
        let mut s = SolverSession::new(&parsed.formulas, parsed.bool_vars.iter().map(String::as_str)).unwrap();
        s.freeze(&logitext::Assignment::new().with(RandomDoc::name(var), value)).unwrap();
        let exists = (0..1u32 << doc.vars)
            .any(|bits| (bits >> var & 1 == 1) == value && doc.stmts.iter().all(|st| st.holds(bits)));
        match s.propose_model() {
            Some(m) => prop_assert_eq!(m.get_bool(&RandomDoc::name(var)), Some(value)),
            None => prop_assert!(!exists),
        }
    }

    #[test]
    fn proposals_are_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let doc = RandomDoc::generate(&mut rng, 10);
        let parsed = parse_document(&doc.source).unwrap();
        let run = || {
            let mut s = SolverSession::new(&parsed.formulas, parsed.bool_vars.iter().map(String::as_str)).unwrap();
            s.enumerate_models(Some(5))
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn first_model_is_false_first() {
    let doc = parse_document("```(a, b, c)```\nx\n```\na or b or c\n```\n").unwrap();
    let s = SolverSession::new(&doc.formulas, doc.bool_vars.iter().map(String::as_str)).unwrap();
    let m = s.propose_model().unwrap();
    assert_eq!(
        (m.get_bool("a"), m.get_bool("b"), m.get_bool("c")),
        (Some(false), Some(false), Some(true))
    );
}
