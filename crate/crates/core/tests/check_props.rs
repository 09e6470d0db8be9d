mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{RandomDoc, RandomTextDoc};
use logitext::check::{verify_all, Checker, CoverStatus};
use logitext::oracle::{OracleScript, ScriptedOracle};
use logitext::theory::NlCache;
use logitext::{parse_document, Assignment, CheckStatus, SolverConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Setup {
    doc: RandomTextDoc,
    parsed: logitext::ParsedDocument,
    oracle: ScriptedOracle,
}

fn setup(seed: u64) -> Setup {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let doc = RandomTextDoc::generate(&mut rng, 6);
    let parsed = parse_document(&doc.source).unwrap();
    let oracle = ScriptedOracle::new(OracleScript::from_json(&doc.script).unwrap());
    Setup { doc, parsed, oracle }
}

fn frozen(doc: &RandomDoc, mask: u16, values: u16) -> (Assignment, Vec<(usize, bool)>) {
    let fixed: Vec<(usize, bool)> = (0..doc.vars)
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| (i, values >> i & 1 == 1))
        .collect();
    let pi = fixed
        .iter()
        .map(|&(i, v)| (RandomDoc::name(i), logitext::Value::Bool(v)))
        .collect();
    (pi, fixed)
}

fn brute(doc: &RandomDoc, fixed: &[(usize, bool)], projection: &[usize]) -> BTreeSet<BTreeMap<String, bool>> {
    (0..1u32 << doc.vars)
        .filter(|bits| fixed.iter().all(|&(i, v)| (bits >> i & 1 == 1) == v))
        .filter(|bits| doc.stmts.iter().all(|s| s.holds(*bits)))
        .map(|bits| {
            projection
                .iter()
                .map(|&i| (RandomDoc::name(i), bits >> i & 1 == 1))
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generation_is_sound_and_complete(seed in any::<u64>(), mask in any::<u16>(), values in any::<u16>()) {
        let s = setup(seed);
        let (pi, fixed) = frozen(&s.doc.logic, mask, values);
        let config = SolverConfig::default();
        let cache = NlCache::in_memory();
        let outcome = Checker::new(&s.parsed, &config, &s.oracle, &cache).check(&pi).unwrap();
        let expected = brute(&s.doc.logic, &fixed, &[]);
        match &outcome.status {
            CheckStatus::Sat(total) => {
                for f in &s.parsed.formulas {
                    prop_assert!(f.eval(total).unwrap());
                }
                for (name, v) in pi.iter() {
                    prop_assert_eq!(total.get(name), Some(v));
                }
                let judgments = verify_all(&s.parsed, total, &s.oracle).unwrap();
                prop_assert!(judgments.iter().all(|j| j.matches()));
            }
            CheckStatus::Unsat => prop_assert!(expected.is_empty()),
            CheckStatus::Timeout => prop_assert!(false, "timeout"),
        }
        prop_assert_eq!(outcome.is_sat(), !expected.is_empty());
    }

    #[test]
    fn cover_finds_every_criteria_combination(seed in any::<u64>(), mask in any::<u16>(), values in any::<u16>()) {
        let s = setup(seed);
        let (pi, fixed) = frozen(&s.doc.logic, mask, values);
        let criteria: Vec<usize> = (0..s.doc.criteria).collect();
        let config = SolverConfig {
            cover: true,
            cover_vars: Some(criteria.iter().map(|&i| RandomDoc::name(i)).collect()),
            ..SolverConfig::default()
        };
        let cache = NlCache::in_memory();
        let outcome = Checker::new(&s.parsed, &config, &s.oracle, &cache).cover(&pi).unwrap();
        prop_assert_eq!(outcome.status, CoverStatus::Exhausted);
        let got: Vec<BTreeMap<String, bool>> = outcome
            .solutions
            .iter()
            .map(|a| criteria.iter().map(|&i| (RandomDoc::name(i), a.get_bool(&RandomDoc::name(i)).unwrap())).collect())
            .collect();
        let unique: BTreeSet<_> = got.iter().cloned().collect();
        prop_assert_eq!(unique.len(), got.len());
        prop_assert_eq!(unique, brute(&s.doc.logic, &fixed, &criteria));
        for a in &outcome.solutions {
            let text = a.get_str("M").unwrap();
            for &i in &criteria {
                let has = text.contains(&RandomTextDoc::keyword(i));
                prop_assert_eq!(has, a.get_bool(&RandomDoc::name(i)).unwrap());
            }
        }
    }

    #[test]
    fn classification_agrees_with_generation(seed in any::<u64>(), mask in any::<u16>(), values in any::<u16>()) {
        let s = setup(seed);
        let (pi, _) = frozen(&s.doc.logic, mask, values);
        let config = SolverConfig::default();
        let cache = NlCache::in_memory();
        let checker = Checker::new(&s.parsed, &config, &s.oracle, &cache);
        if let CheckStatus::Sat(total) = checker.check(&pi).unwrap().status {
            let text = total.get_str("M").unwrap().to_string();
            let classified = checker.check(&pi.clone().with("M", text)).unwrap();
            prop_assert!(classified.is_sat());
            let got = classified.assignment().unwrap();
            for i in 0..s.doc.criteria {
                let name = RandomDoc::name(i);
                prop_assert_eq!(got.get_bool(&name), total.get_bool(&name));
            }
        }
    }
}
