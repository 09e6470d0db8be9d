//! Scoring externally produced transcripts against the document's logic.
//!
//! The compositional gap compares a subject's whole-prompt verdicts with
//! verdicts assembled from its clause-level answers through the formulas.
//! The combinatorial gap compares how many distinct valid criterion
//! combinations a subject produced with how many exist.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::check::decision_projection;
use crate::error::{GapError, ModelError};
use crate::logic::SolverSession;
use crate::model::{Assignment, Formula, ParsedDocument};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub id: String,
    pub whole_prompt: bool,
    /// The subject's answer for each clause.
    pub clauses: Assignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub id: String,
    /// Values the subject was asked to respect.
    #[serde(default)]
    pub given: Assignment,
    pub assignments: Vec<Assignment>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    #[serde(default)]
    pub classification: Vec<ClassificationRecord>,
    #[serde(default)]
    pub generation: Vec<GenerationRecord>,
}

impl Transcript {
    pub fn is_empty(&self) -> bool {
        self.classification.is_empty() && self.generation.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationScore {
    pub id: String,
    pub label: bool,
    pub whole_prompt: bool,
    /// `None` when the clause answers contradict the formulas.
    pub clausewise: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionalGap {
    pub target: String,
    pub a: f64,
    pub a_star: f64,
    pub delta: f64,
    pub instances: Vec<ClassificationScore>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountScore {
    pub id: String,
    pub n: usize,
    pub n_star: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinatorialGap {
    pub projection: Vec<String>,
    /// `None` when every instance was skipped.
    pub delta_prime: Option<f64>,
    pub instances: Vec<CountScore>,
    /// Instances with no valid combination at all.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GapReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compositional: Option<CompositionalGap>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub combinatorial: Option<CombinatorialGap>,
}

/// The first formula-defined variable that nothing else reads.
pub fn default_target(doc: &ParsedDocument) -> Option<&str> {
    let used: BTreeSet<&str> = doc
        .formulas
        .iter()
        .flat_map(|f| match f {
            Formula::Iff(_, e) => e.vars(),
            other => other.vars(),
        })
        .chain(doc.nltcs.iter().flat_map(|n| n.dep_vars()))
        .collect();
    doc.formulas.iter().find_map(|f| match f {
        Formula::Iff(v, _) if !used.contains(v.as_str()) => Some(v.as_str()),
        _ => None,
    })
}

fn session(doc: &ParsedDocument) -> Result<SolverSession, ModelError> {
    SolverSession::new(&doc.formulas, doc.bool_vars.iter().map(String::as_str))
}

/// Value of `target` implied by the clause answers, or `None` if they contradict the formulas.
fn implied(doc: &ParsedDocument, target: &str, clauses: &Assignment) -> Result<Option<bool>, ModelError> {
    let mut s = session(doc)?;
    s.freeze(clauses)?;
    Ok(s.propose_model().and_then(|m| m.get_bool(target)))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Accuracy of whole-prompt answers `a`, of clause answers composed through
/// the formulas `a*`, and `a - a*`. Inputs are aligned by position.
pub fn compositional_gap(
    doc: &ParsedDocument,
    target: &str,
    ids: &[String],
    labels: &[bool],
    whole_prompt: &[bool],
    clauses: &[Assignment],
) -> Result<CompositionalGap, GapError> {
    let n = labels.len();
    if [ids.len(), whole_prompt.len(), clauses.len()].iter().any(|&m| m != n) {
        return Err(GapError::LengthMismatch(format!(
            "{} ids, {} labels, {} whole-prompt answers, {} clause sets",
            ids.len(),
            n,
            whole_prompt.len(),
            clauses.len()
        )));
    }
    if n == 0 {
        return Err(GapError::Empty);
    }
    if !doc.bool_vars.contains(target) {
        return Err(ModelError::UnknownVar(target.to_string()).into());
    }
    let mut instances = Vec::with_capacity(n);
    for i in 0..n {
        let clausewise = implied(doc, target, &clauses[i])?;
        if clausewise.is_none() {
            log::warn!("instance {}: clause answers contradict the formulas", ids[i]);
        }
        instances.push(ClassificationScore {
            id: ids[i].clone(),
            label: labels[i],
            whole_prompt: whole_prompt[i],
            clausewise,
        });
    }
    let a = mean(instances.iter().map(|s| f64::from(u8::from(s.whole_prompt == s.label))));
    let a_star = mean(
        instances
            .iter()
            .map(|s| f64::from(u8::from(s.clausewise == Some(s.label)))),
    );
    Ok(CompositionalGap {
        target: target.to_string(),
        a,
        a_star,
        delta: a - a_star,
        instances,
    })
}

/// Mean over instances of `(n* - n) / n*`, where `n*` counts the valid
/// combinations of `projection` and `n` the distinct valid ones the subject gave.
pub fn combinatorial_gap(
    doc: &ParsedDocument,
    records: &[GenerationRecord],
    projection: Option<&[String]>,
) -> Result<CombinatorialGap, GapError> {
    if records.is_empty() {
        return Err(GapError::Empty);
    }
    let mut instances = Vec::new();
    let mut skipped = Vec::new();
    let mut used_projection = Vec::new();
    for rec in records {
        let proj: Vec<String> = match projection {
            Some(p) => p.to_vec(),
            None => decision_projection(doc, &rec.given),
        };
        let mut base = session(doc)?;
        base.freeze(&rec.given)?;
        base.set_projection(proj.iter().map(String::as_str))?;

        let mut distinct = BTreeSet::new();
        for a in &rec.assignments {
            let mut s = base.clone();
            if s.freeze(&a.booleans()).is_err() || s.propose_model().is_none() {
                continue;
            }
            distinct.insert(a.project(proj.iter().map(String::as_str)));
        }
        let n_star = base.enumerate_models(None).len();
        if n_star == 0 {
            log::warn!("instance {}: no valid combination exists; skipped", rec.id);
            skipped.push(rec.id.clone());
            continue;
        }
        instances.push(CountScore {
            id: rec.id.clone(),
            n: distinct.len(),
            n_star,
        });
        used_projection = proj;
    }
    let delta_prime =
        (!instances.is_empty()).then(|| mean(instances.iter().map(|c| (c.n_star - c.n) as f64 / c.n_star as f64)));
    Ok(CombinatorialGap {
        projection: used_projection,
        delta_prime,
        instances,
        skipped,
    })
}

/// Scores a transcript. Classification records need a label each.
pub fn gap_report(
    doc: &ParsedDocument,
    target: Option<&str>,
    labels: &BTreeMap<String, bool>,
    transcript: &Transcript,
    projection: Option<&[String]>,
) -> Result<GapReport, GapError> {
    if transcript.is_empty() {
        return Err(GapError::Empty);
    }
    let mut report = GapReport::default();
    if !transcript.classification.is_empty() {
        let target = target
            .or_else(|| default_target(doc))
            .ok_or_else(|| GapError::LengthMismatch("document defines no target variable".into()))?;
        let recs = &transcript.classification;
        let ids: Vec<String> = recs.iter().map(|r| r.id.clone()).collect();
        let labels: Vec<bool> = recs
            .iter()
            .map(|r| {
                labels
                    .get(&r.id)
                    .copied()
                    .ok_or_else(|| GapError::LengthMismatch(format!("no label for {}", r.id)))
            })
            .collect::<Result<_, _>>()?;
        let whole: Vec<bool> = recs.iter().map(|r| r.whole_prompt).collect();
        let clauses: Vec<Assignment> = recs.iter().map(|r| r.clauses.clone()).collect();
        report.compositional = Some(compositional_gap(doc, target, &ids, &labels, &whole, &clauses)?);
    }
    if !transcript.generation.is_empty() {
        report.combinatorial = Some(combinatorial_gap(doc, &transcript.generation, projection)?);
    }
    Ok(report)
}

impl GapReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or_default()
    }

    /// One row per instance, for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,id,label,whole_prompt,clausewise,n,n_star\n");
        let b = |x: Option<bool>| x.map_or(String::new(), |v| v.to_string());
        if let Some(c) = &self.compositional {
            for s in &c.instances {
                let _ = writeln!(
                    out,
                    "compositional,{},{},{},{},,",
                    s.id,
                    s.label,
                    s.whole_prompt,
                    b(s.clausewise)
                );
            }
        }
        if let Some(c) = &self.combinatorial {
            for s in &c.instances {
                let _ = writeln!(out, "combinatorial,{},,,,{},{}", s.id, s.n, s.n_star);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse_document;
    use proptest::prelude::*;

    const POLICY: &str = include_str!("../fixtures/disruptive_policy.lt");

    fn clauses(c: [bool; 5]) -> Assignment {
        ["C1", "C2", "C3", "C4", "C5"]
            .iter()
            .zip(c)
            .fold(Assignment::new(), |a, (k, v)| a.with(*k, v))
    }

    #[test]
    fn target_defaults_to_the_first_top_level_definition() {
        assert_eq!(default_target(&parse_document(POLICY).unwrap()), Some("d"));
    }

    #[test]
    fn perfect_and_extreme_compositional_cases() {
        let doc = parse_document(POLICY).unwrap();
        let ids = vec!["m1".to_string(), "m2".to_string()];
        let c = vec![
            clauses([true, true, true, false, false]),
            clauses([false, true, true, false, false]),
        ];
        let g = compositional_gap(&doc, "d", &ids, &[true, false], &[true, false], &c).unwrap();
        assert_eq!((g.a, g.a_star, g.delta), (1.0, 1.0, 0.0));
        let g = compositional_gap(&doc, "d", &ids[..1], &[true], &[false], &c[..1]).unwrap();
        assert_eq!(g.delta, -1.0);
        assert!(matches!(
            compositional_gap(&doc, "d", &ids, &[true], &[true, false], &c),
            Err(GapError::LengthMismatch(_))
        ));
    }

    #[test]
    fn combinatorial_counts() {
        let doc = parse_document(POLICY).unwrap();
        let given = Assignment::new().with("d", true);
        let all: Vec<Assignment> = (0..8u8)
            .filter(|m| *m != 0)
            .map(|m| clauses([true, true, m & 1 != 0, m & 2 != 0, m & 4 != 0]))
            .collect();
        let rec = |assignments: Vec<Assignment>| GenerationRecord {
            id: "g".into(),
            given: given.clone(),
            assignments,
        };
        let full = combinatorial_gap(&doc, &[rec(all.clone())], None).unwrap();
        assert_eq!(full.delta_prime, Some(0.0));
        let two = combinatorial_gap(&doc, &[rec(vec![all[0].clone(), all[0].clone(), all[3].clone()])], None).unwrap();
        assert_eq!((two.instances[0].n, two.instances[0].n_star), (2, 7));
        let invalid = combinatorial_gap(&doc, &[rec(vec![clauses([false, true, true, false, false])])], None).unwrap();
        assert_eq!(invalid.delta_prime, Some(1.0));
        let impossible = GenerationRecord {
            id: "x".into(),
            given: given.clone().with("C1", false),
            assignments: vec![],
        };
        let skipped = combinatorial_gap(&doc, &[impossible], None).unwrap();
        assert_eq!((skipped.delta_prime, skipped.skipped.len()), (None, 1));
    }

    proptest! {
        #[test]
        fn compositional_gap_ignores_instance_order(
            rows in proptest::collection::vec((any::<bool>(), any::<bool>(), any::<[bool; 5]>()), 1..12),
            rot in 0usize..12,
        ) {
            let doc = parse_document(POLICY).unwrap();
            let score = |rows: &[(bool, bool, [bool; 5])]| {
                let ids: Vec<String> = (0..rows.len()).map(|i| i.to_string()).collect();
                let labels: Vec<bool> = rows.iter().map(|r| r.0).collect();
                let whole: Vec<bool> = rows.iter().map(|r| r.1).collect();
                let cs: Vec<Assignment> = rows.iter().map(|r| clauses(r.2)).collect();
                let g = compositional_gap(&doc, "d", &ids, &labels, &whole, &cs).unwrap();
                (g.a, g.a_star, g.delta)
            };
            let mut rotated = rows.clone();
            rotated.rotate_left(rot % rows.len());
            let (x, y) = (score(&rows), score(&rotated));
            prop_assert!((x.0 - y.0).abs() < 1e-12 && (x.1 - y.1).abs() < 1e-12 && (x.2 - y.2).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&x.2));
        }

        #[test]
        fn duplicates_and_filtering_never_inflate_n(
            picks in proptest::collection::vec(any::<[bool; 5]>(), 0..20),
        ) {
            let doc = parse_document(POLICY).unwrap();
            let given = Assignment::new().with("d", true);
            let mut assignments: Vec<Assignment> = picks.iter().map(|c| clauses(*c)).collect();
            let once = combinatorial_gap(&doc, &[GenerationRecord { id: "g".into(), given: given.clone(), assignments: assignments.clone() }], None).unwrap();
            assignments.extend(assignments.clone());
            let twice = combinatorial_gap(&doc, &[GenerationRecord { id: "g".into(), given, assignments }], None).unwrap();
            prop_assert_eq!(once.instances[0].n, twice.instances[0].n);
            prop_assert!(once.instances[0].n <= once.instances[0].n_star);
            prop_assert!(once.instances[0].n <= picks.len());
        }
    }
}
