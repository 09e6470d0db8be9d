use std::fmt::Write as _;

use super::{OracleRequest, TargetedConstraint};
use crate::model::{Value, VerifyJudgment};

pub const PROPOSE_SYSTEM: &str =
    "You write concise, clear prose that meets semantic constraints. Return ONLY the text, no preambles.";

pub const VERIFY_SYSTEM: &str = "You are a meticulous verifier. \
Given a candidate text and a list of constraints with desired truth values, \
judge for EACH constraint whether it is semantically TRUE or FALSE in the candidate text. \
Be strict and literal, not aspirational.";

const NONE: &str = "(none)";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

fn py_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

/// `- (C1) target=True :: clause`, followed by one indented line per dependency
/// bound to something other than the text under construction.
fn constraint_line(out: &mut String, c: &TargetedConstraint, req: &OracleRequest) {
    let _ = write!(
        out,
        "- ({}) target={} :: {}",
        c.nltc.id,
        py_bool(c.target),
        c.nltc.clause
    );
    for dep in &c.nltc.deps {
        if req.subject.as_deref() == Some(dep.var.as_str()) {
            continue;
        }
        let value = match req.context.get(&dep.var) {
            Some(Value::Bool(b)) => py_bool(*b).to_string(),
            Some(Value::Str(s)) => serde_json::to_string(s).unwrap_or_default(),
            None => "unknown".to_string(),
        };
        let _ = write!(out, "\n    where \"{}\" is {}", dep.phrase, value);
    }
}

fn constraints_block(req: &OracleRequest) -> String {
    if req.constraints.is_empty() {
        return NONE.to_string();
    }
    let mut out = String::new();
    for (i, c) in req.constraints.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        constraint_line(&mut out, c, req);
    }
    out
}

fn failed_block(req: &OracleRequest) -> String {
    if req.failed.is_empty() {
        return NONE.to_string();
    }
    let clause_of = |j: &VerifyJudgment| {
        req.constraints
            .iter()
            .find(|c| c.nltc.id == j.id)
            .map_or(j.description.clone(), |c| c.nltc.clause.clone())
    };
    req.failed
        .iter()
        .map(|j| {
            format!(
                "- ({}) target={}, predicted={} :: {} [why failed last time: {}]",
                j.id,
                py_bool(j.target),
                py_bool(j.predicted),
                clause_of(j),
                j.rationale
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn history_block(req: &OracleRequest) -> String {
    if req.history.is_empty() {
        NONE.to_string()
    } else {
        req.history.join("\n\n---\n\n")
    }
}

pub fn build_propose_prompt(req: &OracleRequest) -> Prompt {
    let user = format!(
        "You must produce a text that satisfies the following semantic constraint truth values.

Constraints (with target truth values):
{constraints}

If some constraints previously failed, focus on satisfying them now:
{failed}

Guidelines:
Write one coherent text (few paragraphs max) that attempts to satisfy ALL target truth values.
The text should be natural and readable.
Avoid mentioning constraints explicitly.
Do not include JSON. Output ONLY the text.

Previous attempts for context (do NOT copy; improve instead):
{history}
",
        constraints = constraints_block(req),
        failed = failed_block(req),
        history = history_block(req),
    );
    Prompt {
        system: PROPOSE_SYSTEM.to_string(),
        user,
    }
}

/// Makes a candidate safe to place between `"""` fences: inside any run of
/// three or more double quotes every quote is backslash-escaped.
pub fn escape_candidate(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '"' {
            let run = chars[i..].iter().take_while(|&&c| c == '"').count();
            for _ in 0..run {
                if run >= 3 {
                    out.push('\\');
                }
                out.push('"');
            }
            i += run;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

pub fn build_verify_prompt(req: &OracleRequest) -> Prompt {
    let candidate = escape_candidate(req.candidate.as_deref().unwrap_or_default());
    let user = format!(
        "Candidate text:
\"\"\"
{candidate}
\"\"\"


Evaluate each constraint independently. For each item, return JSON array entries of the form:
{{
  \"id\": \"<constraint id>\",
  \"description\": \"<verbatim description>\",
  \"target\": true|false,
  \"predicted\": true|false,
  \"rationale\": \"<short explanation>\"
}}

Constraints:
{constraints}

Return ONLY valid JSON array, nothing else.",
        constraints = constraints_block(req),
    );
    Prompt {
        system: VERIFY_SYSTEM.to_string(),
        user,
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::{nltc, targeted};
    use super::super::TargetedConstraint;
    use super::*;
    use crate::model::Assignment;
    use proptest::prelude::*;

    fn six() -> Vec<TargetedConstraint> {
        (1..=6)
            .map(|i| targeted(&format!("C{i}"), &format!("clause {i}"), i == 1))
            .collect()
    }

    #[test]
    fn fresh_propose_has_empty_sections() {
        let req = OracleRequest::propose("M", six(), Assignment::new()).unwrap();
        let p = build_propose_prompt(&req);
        assert_eq!(p.system, PROPOSE_SYSTEM);
        assert_eq!(p.user.matches("target=").count(), 6);
        assert!(p
            .user
            .contains("- (C1) target=True :: clause 1\n- (C2) target=False :: clause 2"));
        assert!(p.user.contains("focus on satisfying them now:\n(none)\n"));
        assert!(p.user.ends_with("(do NOT copy; improve instead):\n(none)\n"));
    }

    #[test]
    fn refinement_lists_failures_and_history() {
        let failed = vec![VerifyJudgment {
            id: "C2".into(),
            description: "clause 2".into(),
            target: false,
            predicted: true,
            rationale: "mentions it".into(),
        }];
        let req = OracleRequest::propose("M", six(), Assignment::new())
            .unwrap()
            .refine(failed, vec!["first".into(), "second".into()]);
        let p = build_propose_prompt(&req);
        assert!(p
            .user
            .contains("- (C2) target=False, predicted=True :: clause 2 [why failed last time: mentions it]"));
        assert!(p.user.contains("first\n\n---\n\nsecond\n"));
    }

    #[test]
    fn dependencies_render_inline() {
        let c = TargetedConstraint {
            nltc: nltc(
                "C6",
                "it is violent",
                &[("it is violent", "C8"), ("the message", "M"), ("author", "A")],
            ),
            target: true,
        };
        let ctx = Assignment::new().with("C8", true).with("A", "Bob \"B\"");
        let req = OracleRequest::verify(Some("M".into()), vec![c], ctx, "text").unwrap();
        let p = build_verify_prompt(&req);
        assert!(p.user.contains(
            "- (C6) target=True :: it is violent\n    where \"it is violent\" is True\n    where \"author\" is \"Bob \\\"B\\\"\""
        ));
        assert!(!p.user.contains("\"the message\" is"));
    }

    #[test]
    fn verify_prompt_shape() {
        let req = OracleRequest::verify(
            Some("M".into()),
            vec![targeted("C1", "x", true)],
            Assignment::new(),
            "hello",
        )
        .unwrap();
        let p = build_verify_prompt(&req);
        assert_eq!(p.system, VERIFY_SYSTEM);
        assert!(p
            .user
            .starts_with("Candidate text:\n\"\"\"\nhello\n\"\"\"\n\n\nEvaluate"));
        assert!(p
            .user
            .ends_with("Constraints:\n- (C1) target=True :: x\n\nReturn ONLY valid JSON array, nothing else."));
    }

    #[test]
    fn triple_quotes_are_escaped() {
        assert_eq!(escape_candidate(r#"say """hi""" "ok""#), r#"say \"\"\"hi\"\"\" "ok""#);
        assert_eq!(escape_candidate("\"\"\"\""), r#"\"\"\"\""#);
    }

    proptest! {
        #[test]
        fn escaped_candidate_never_closes_the_fence(s in "[a\"\\\\ ]{0,24}") {
            prop_assert!(!escape_candidate(&s).contains("\"\"\""));
        }
    }
}
