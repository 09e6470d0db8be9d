#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

/// Propositional expression kept separate from the library's own types.
#[derive(Debug, Clone)]
pub enum E {
    V(usize),
    Not(Box<E>),
    And(Box<E>, Box<E>),
    Or(Box<E>, Box<E>),
}

impl E {
    pub fn eval(&self, bits: u32) -> bool {
        match self {
            E::V(i) => bits >> i & 1 == 1,
            E::Not(e) => !e.eval(bits),
            E::And(a, b) => a.eval(bits) && b.eval(bits),
            E::Or(a, b) => a.eval(bits) || b.eval(bits),
        }
    }

    pub fn render(&self) -> String {
        match self {
            E::V(i) => format!("x{i}"),
            E::Not(e) => format!("not ({})", e.render()),
            E::And(a, b) => format!("({}) and ({})", a.render(), b.render()),
            E::Or(a, b) => format!("({}) or ({})", a.render(), b.render()),
        }
    }

    pub fn random(rng: &mut impl Rng, vars: usize, depth: u32) -> E {
        if depth == 0 || rng.random_bool(0.3) {
            return E::V(rng.random_range(0..vars));
        }
        match rng.random_range(0..3) {
            0 => E::Not(Box::new(E::random(rng, vars, depth - 1))),
            1 => E::And(
                Box::new(E::random(rng, vars, depth - 1)),
                Box::new(E::random(rng, vars, depth - 1)),
            ),
            _ => E::Or(
                Box::new(E::random(rng, vars, depth - 1)),
                Box::new(E::random(rng, vars, depth - 1)),
            ),
        }
    }
}

/// A statement: either an assertion or a definition `x_k = e`.
#[derive(Debug, Clone)]
pub struct Stmt {
    pub defines: Option<usize>,
    pub expr: E,
}

impl Stmt {
    pub fn holds(&self, bits: u32) -> bool {
        match self.defines {
            Some(k) => (bits >> k & 1 == 1) == self.expr.eval(bits),
            None => self.expr.eval(bits),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomDoc {
    pub vars: usize,
    pub stmts: Vec<Stmt>,
    pub source: String,
}

impl RandomDoc {
    pub fn generate(rng: &mut impl Rng, max_vars: usize) -> RandomDoc {
        let vars = rng.random_range(1..=max_vars);
        let count = rng.random_range(1..=4);
        let stmts: Vec<Stmt> = (0..count)
            .map(|_| Stmt {
                defines: rng.random_bool(0.5).then(|| rng.random_range(0..vars)),
                expr: E::random(rng, vars, 3),
            })
            .collect();
        let decls: Vec<String> = (0..vars).map(|i| format!("x{i}")).collect();
        let code: Vec<String> = stmts
            .iter()
            .map(|s| match s.defines {
                Some(k) => format!("x{k} = {}", s.expr.render()),
                None => s.expr.render(),
            })
            .collect();
        let source = format!(
            "```({})```\nA generated document.\n```\n{}\n```\n",
            decls.join(", "),
            code.join("\n")
        );
        RandomDoc { vars, stmts, source }
    }

    pub fn name(i: usize) -> String {
        format!("x{i}")
    }

    /// Every satisfying total assignment, projected onto `projection` and deduplicated.
    pub fn brute_force(&self, projection: &[usize]) -> BTreeSet<BTreeMap<String, bool>> {
        (0..1u32 << self.vars)
            .filter(|bits| self.stmts.iter().all(|s| s.holds(*bits)))
            .map(|bits| {
                projection
                    .iter()
                    .map(|&i| (Self::name(i), bits >> i & 1 == 1))
                    .collect()
            })
            .collect()
    }
}

/// A random document whose first `criteria` variables are defined by prose
/// clauses over a string variable `M`, plus a keyword script that realizes them.
#[derive(Debug, Clone)]
pub struct RandomTextDoc {
    pub logic: RandomDoc,
    pub criteria: usize,
    pub source: String,
    pub script: String,
}

impl RandomTextDoc {
    pub fn keyword(i: usize) -> String {
        format!("w{i}q")
    }

    pub fn generate(rng: &mut impl Rng, max_vars: usize) -> RandomTextDoc {
        let logic = RandomDoc::generate(rng, max_vars);
        let criteria = rng.random_range(1..=logic.vars);
        // A criterion cannot also be defined by a code statement.
        let stmts: Vec<Stmt> = logic
            .stmts
            .iter()
            .cloned()
            .map(|mut s| {
                if s.defines.is_some_and(|k| k < criteria) {
                    s.defines = None;
                }
                s
            })
            .collect();
        let logic = RandomDoc { stmts, ..logic };
        let decls: Vec<String> = std::iter::once("M:str".to_string())
            .chain((0..logic.vars).map(RandomDoc::name))
            .collect();
        let lets: Vec<String> = (0..criteria)
            .map(|i| format!("{{{{let x{i} = [[the message raises point {i}]] where \"the message\" is M}}}}"))
            .collect();
        let code: Vec<String> = logic
            .stmts
            .iter()
            .map(|s| match s.defines {
                Some(k) => format!("x{k} = {}", s.expr.render()),
                None => s.expr.render(),
            })
            .collect();
        let source = format!(
            "```({})```\nPolicy: {}.\n```\n{}\n```\n",
            decls.join(", "),
            lets.join(" and "),
            code.join("\n")
        );
        let rules: BTreeMap<String, Vec<String>> = (0..criteria)
            .map(|i| (RandomDoc::name(i), vec![Self::keyword(i)]))
            .collect();
        let script = serde_json::json!({ "rules": rules, "refusals": [] }).to_string();
        RandomTextDoc {
            logic,
            criteria,
            source,
            script,
        }
    }
}

pub mod prompts {
    use logitext::oracle::{OracleRequest, TargetedConstraint};
    use logitext::{Assignment, Dependency, Nltc, VerifyJudgment};
    use std::sync::Arc;

    pub const CLAUSES: [&str; 6] = [
        "Content that is a political reference.",
        "Name of a political party or group, including the people that belong to it.",
        "Content or activity related to politics.",
        "Content that could be a political reference.",
        "Names of Political figures or people",
        "References to royal families, their titles and duties.",
    ];

    pub fn constraints() -> Vec<TargetedConstraint> {
        CLAUSES
            .iter()
            .enumerate()
            .map(|(i, clause)| {
                let id = format!("C{}", i + 1);
                TargetedConstraint {
                    nltc: Nltc {
                        id: id.clone(),
                        out_var: id,
                        clause: clause.to_string(),
                        deps: vec![Dependency {
                            phrase: "message".into(),
                            var: "M".into(),
                        }],
                        doc_context: Arc::from(""),
                    },
                    target: i == 0,
                }
            })
            .collect()
    }

    pub fn fresh() -> OracleRequest {
        OracleRequest::propose("M", constraints(), Assignment::new()).unwrap()
    }

    pub fn refine() -> OracleRequest {
        let failed = |id: &str, clause: &str, why: &str| VerifyJudgment {
            id: id.into(),
            description: clause.into(),
            target: false,
            predicted: true,
            rationale: why.into(),
        };
        fresh().refine(
            vec![
                failed("C3", CLAUSES[2], "The text mentions a campaign rally."),
                failed("C5", CLAUSES[4], "A senator is named."),
            ],
            vec![
                "The senator's campaign rally drew a crowd near the Capitol.".into(),
                "A crowd gathered near the Capitol dome for a rally.".into(),
            ],
        )
    }

    pub fn verify() -> OracleRequest {
        OracleRequest::verify(
            Some("M".into()),
            constraints(),
            Assignment::new(),
            r#"The skyline features a Capitol-like dome. He said """hello""" twice."#,
        )
        .unwrap()
    }
}
