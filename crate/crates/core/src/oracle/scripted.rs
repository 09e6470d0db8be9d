//! Deterministic keyword oracle.
//!
//! Each constraint id maps to a list of keywords. A text "satisfies" a
//! constraint when it contains every keyword. Proposals are built by joining
//! the keywords of all true-target constraints, so a noise-free scripted
//! oracle always verifies its own proposals.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Oracle, OracleRequest, TargetedConstraint};
use crate::error::OracleError;
use crate::model::{Value, VerifyJudgment};

/// Proposal emitted for a refused target combination. It never verifies.
pub const REFUSAL_SENTINEL: &str = "UNREALIZABLE";

/// Token appended to every scripted proposal.
pub const FILLER: &str = "msg";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleScript {
    #[serde(default)]
    pub rules: BTreeMap<String, Vec<String>>,
    /// Target combinations the oracle declares unrealizable.
    #[serde(default)]
    pub refusals: Vec<Vec<(String, bool)>>,
}

impl OracleScript {
    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        serde_json::from_str(text).map_err(|e| OracleError::Config(format!("bad oracle script: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, OracleError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| OracleError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Ids in the script that are not in `known`.
    pub fn unknown_ids<'a>(&'a self, known: &[&str]) -> Vec<&'a str> {
        let refusal_ids = self.refusals.iter().flatten().map(|(id, _)| id.as_str());
        let mut out: Vec<&str> = self
            .rules
            .keys()
            .map(String::as_str)
            .chain(refusal_ids)
            .filter(|id| !known.contains(id))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    fn refuses(&self, constraints: &[TargetedConstraint]) -> bool {
        let targets: HashMap<&str, bool> = constraints.iter().map(|c| (c.nltc.id.as_str(), c.target)).collect();
        self.refusals
            .iter()
            .any(|combo| !combo.is_empty() && combo.iter().all(|(id, b)| targets.get(id.as_str()) == Some(b)))
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedOracle {
    script: OracleScript,
    flip_probability: f64,
    seed: u64,
}

impl ScriptedOracle {
    pub fn new(script: OracleScript) -> Self {
        ScriptedOracle {
            script,
            flip_probability: 0.0,
            seed: 0,
        }
    }

    /// Flips each verify verdict with probability `p`. The flip is a pure
    /// function of the seed, the candidate and the constraint id.
    pub fn with_noise(mut self, p: f64, seed: u64) -> Self {
        self.flip_probability = p.clamp(0.0, 1.0);
        self.seed = seed;
        self
    }

    pub fn script(&self) -> &OracleScript {
        &self.script
    }

    fn keywords(&self, id: &str) -> &[String] {
        self.script.rules.get(id).map_or(&[], Vec::as_slice)
    }

    fn flips(&self, candidate: &str, id: &str) -> bool {
        if self.flip_probability <= 0.0 {
            return false;
        }
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(candidate.as_bytes());
        h.update([0]);
        h.update(id.as_bytes());
        let digest = h.finalize();
        let mut word = [0u8; 8];
        word.copy_from_slice(&digest[..8]);
        let unit = (u64::from_le_bytes(word) >> 11) as f64 / (1u64 << 53) as f64;
        unit < self.flip_probability
    }

    fn judge(&self, c: &TargetedConstraint, req: &OracleRequest, candidate: &str) -> bool {
        if candidate.starts_with(REFUSAL_SENTINEL) && req.subject.is_some() {
            return !c.target;
        }
        let mut text = Vec::new();
        let mut bool_deps = true;
        for dep in &c.nltc.deps {
            if req.subject.as_deref() == Some(dep.var.as_str()) {
                text.push(candidate);
                continue;
            }
            match req.context.get(&dep.var) {
                Some(Value::Str(s)) => text.push(s.as_str()),
                Some(Value::Bool(b)) => bool_deps &= *b,
                None => {}
            }
        }
        // A constraint that reads only booleans holds exactly when they all do.
        let keyword_match = match self.script.rules.get(&c.nltc.id) {
            Some(kws) => {
                let text = text.join("\n");
                kws.iter().all(|k| text.contains(k.as_str()))
            }
            None => text.is_empty(),
        };
        keyword_match && bool_deps
    }
}

fn remove_keyword(text: &str, keyword: &str) -> String {
    text.replace(keyword, " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

impl Oracle for ScriptedOracle {
    fn propose(&self, req: &OracleRequest) -> Result<String, OracleError> {
        let mut text = if self.script.refuses(&req.constraints) {
            REFUSAL_SENTINEL.to_string()
        } else if let (false, Some(last)) = (req.failed.is_empty(), req.history.last()) {
            let mut text = last.clone();
            for j in &req.failed {
                for kw in self.keywords(&j.id) {
                    if j.target && !text.contains(kw.as_str()) {
                        text = format!("{kw} {text}");
                    } else if !j.target {
                        text = remove_keyword(&text, kw);
                    }
                }
            }
            text
        } else {
            let mut sorted: Vec<&TargetedConstraint> = req.constraints.iter().filter(|c| c.target).collect();
            sorted.sort_by(|a, b| a.nltc.id.cmp(&b.nltc.id));
            let mut words: Vec<&str> = Vec::new();
            for c in sorted {
                for kw in self.keywords(&c.nltc.id) {
                    if !words.contains(&kw.as_str()) {
                        words.push(kw);
                    }
                }
            }
            words.push(FILLER);
            words.join(" ")
        };
        if req.history.contains(&text) {
            let base = text;
            text = (2..)
                .map(|k| format!("{base} r{k}"))
                .find(|t| !req.history.contains(t))
                .expect("unbounded suffix search");
        }
        Ok(text)
    }

    fn verify(&self, req: &OracleRequest) -> Result<Vec<VerifyJudgment>, OracleError> {
        let candidate = req.candidate.as_deref().ok_or(OracleError::MissingCandidate)?;
        Ok(req
            .constraints
            .iter()
            .map(|c| {
                let mut predicted = self.judge(c, req, candidate);
                if self.flips(candidate, &c.nltc.id) {
                    predicted = !predicted;
                }
                VerifyJudgment {
                    id: c.nltc.id.clone(),
                    description: c.nltc.clause.clone(),
                    target: c.target,
                    predicted,
                    rationale: "keyword-match".to_string(),
                }
            })
            .collect())
    }
}
