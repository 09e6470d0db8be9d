//! The outer search: propose boolean models, realize string variables through
//! the text theory, and block models the oracle cannot realize.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{CheckError, ModelError};
use crate::logic::SolverSession;
use crate::model::{
    Assignment, CheckOutcome, CheckStatus, Diagnostics, Formula, Nltc, ParsedDocument, SolverConfig, Value, VarKind,
    VerifyJudgment,
};
use crate::oracle::{Oracle, OracleRequest, TargetedConstraint};
use crate::theory::{nlsolve_with, NlCache, NlOutcome, RunContext};
use crate::trace::{BlockReason, Trace, TraceEvent};

/// Variables whose combinations tell solutions apart.
///
/// These are the criteria (let-bound variables, with quantifier hosts standing
/// for their alternatives) that some formula-defined variable bound in `pi`
/// depends on. When `pi` binds no such variable, every criterion counts.
pub fn decision_projection(doc: &ParsedDocument, pi: &Assignment) -> Vec<String> {
    let definitions: BTreeMap<&str, &Formula> = doc
        .formulas
        .iter()
        .filter_map(|f| match f {
            Formula::Iff(v, e) => Some((v.as_str(), e.as_ref())),
            _ => None,
        })
        .collect();
    let criteria: BTreeSet<&str> = doc.criteria.iter().map(String::as_str).collect();

    let mut stack: Vec<&str> = pi
        .iter()
        .filter(|(name, v)| v.as_bool().is_some() && definitions.contains_key(name.as_str()))
        .map(|(name, _)| name.as_str())
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = BTreeSet::new();
    while let Some(v) = stack.pop() {
        if !seen.insert(v) {
            continue;
        }
        if criteria.contains(v) {
            out.insert(v.to_string());
        } else if let Some(e) = definitions.get(v) {
            stack.extend(e.vars());
        }
    }
    if out.is_empty() {
        doc.criteria.clone()
    } else {
        out.into_iter().collect()
    }
}

/// Groups constraints into verify requests that share a candidate text: the
/// first string input of each constraint, or none for boolean-only ones.
fn verify_requests(
    nltcs: &[&Nltc],
    values: &Assignment,
    target_of: impl Fn(&Nltc) -> Result<bool, ModelError>,
) -> Result<Vec<OracleRequest>, CheckError> {
    let mut groups: BTreeMap<Option<&str>, Vec<TargetedConstraint>> = BTreeMap::new();
    for &n in nltcs {
        let subject = n.dep_vars().find(|v| matches!(values.get(v), Some(Value::Str(_))));
        groups.entry(subject).or_default().push(TargetedConstraint {
            nltc: n.clone(),
            target: target_of(n)?,
        });
    }
    let mut out = Vec::new();
    for (subject, constraints) in groups {
        let candidate = subject.and_then(|s| values.get_str(s)).unwrap_or_default().to_string();
        let context = values.filter(|name, _| Some(name) != subject && constraints.iter().any(|c| c.nltc.reads(name)));
        out.push(OracleRequest::verify(
            subject.map(str::to_string),
            constraints,
            context,
            candidate,
        )?);
    }
    Ok(out)
}

/// Verifies every constraint against a total assignment, each targeting the
/// value the assignment gives its output.
pub fn verify_all(
    doc: &ParsedDocument,
    total: &Assignment,
    backend: &dyn Oracle,
) -> Result<Vec<VerifyJudgment>, CheckError> {
    let nltcs: Vec<&Nltc> = doc.nltcs.iter().collect();
    let requests = verify_requests(&nltcs, total, |n| {
        total
            .get_bool(&n.out_var)
            .ok_or_else(|| ModelError::UnboundVar(n.out_var.clone()))
    })?;
    let mut out = Vec::new();
    for req in requests {
        out.extend(crate::oracle::oracle_verify(backend, &req)?);
    }
    let order: BTreeMap<&str, usize> = doc.nltcs.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    out.sort_by_key(|j| order.get(j.id.as_str()).copied());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverStatus {
    Exhausted,
    Limit,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverOutcome {
    pub solutions: Vec<Assignment>,
    pub status: CoverStatus,
    pub diagnostics: Diagnostics,
    /// Variables the solutions are pairwise distinct on.
    pub projection: Vec<String>,
}

impl CoverOutcome {
    pub fn status_json(&self) -> serde_json::Value {
        serde_json::json!({
            "status": self.status,
            "solutions": self.solutions.len(),
            "projection": self.projection,
            "diagnostics": self.diagnostics,
        })
    }
}

enum Step {
    Sat(Assignment, Assignment),
    Unsat,
    Timeout,
}

/// One solver run over a document. Borrowed pieces are shared; the run
/// itself is sequential.
pub struct Checker<'a> {
    doc: &'a ParsedDocument,
    config: &'a SolverConfig,
    backend: &'a dyn Oracle,
    cache: &'a NlCache,
    trace: Option<&'a Trace>,
}

impl<'a> Checker<'a> {
    pub fn new(doc: &'a ParsedDocument, config: &'a SolverConfig, backend: &'a dyn Oracle, cache: &'a NlCache) -> Self {
        Checker {
            doc,
            config,
            backend,
            cache,
            trace: None,
        }
    }

    pub fn with_trace(mut self, trace: Option<&'a Trace>) -> Self {
        self.trace = trace;
        self
    }

    fn run(&self) -> RunContext<'a> {
        RunContext::new(Some(self.config.timeout)).with_trace(self.trace)
    }

    fn validate(&self, pi: &Assignment) -> Result<(), CheckError> {
        self.config.validate()?;
        self.doc.type_check(pi)?;
        Ok(())
    }

    fn unbound_strings(&self, pi: &Assignment) -> Vec<&'a str> {
        self.doc
            .string_vars
            .iter()
            .map(String::as_str)
            .filter(|u| !pi.contains(u))
            .collect()
    }

    /// Classifies when every string variable is bound, generates otherwise.
    pub fn check(&self, pi: &Assignment) -> Result<CheckOutcome, CheckError> {
        if self.unbound_strings(pi).is_empty() {
            self.classify(pi)
        } else {
            self.generate(pi)
        }
    }

    /// Evaluates constraints directly from the bound strings and propagates
    /// definitions; values frozen in `pi` that the oracle contradicts give Unsat.
    pub fn classify(&self, pi: &Assignment) -> Result<CheckOutcome, CheckError> {
        self.validate(pi)?;
        let mut run = self.run();
        run.diagnostics.iterations = 1;
        let status = self.classify_inner(pi, &mut run)?;
        Ok(CheckOutcome {
            status,
            diagnostics: run.finish(),
        })
    }

    fn classify_inner(&self, pi: &Assignment, run: &mut RunContext<'a>) -> Result<CheckStatus, CheckError> {
        let mut session = SolverSession::new(&self.doc.formulas, self.doc.bool_vars.iter().map(String::as_str))?;
        session.freeze(&pi.booleans())?;
        if session.propose_model().is_none() {
            return Ok(CheckStatus::Unsat);
        }
        let mut known = pi.clone();
        let mut pending: Vec<&Nltc> = self.doc.nltcs.iter().collect();
        loop {
            let mut progress = false;
            for f in &self.doc.formulas {
                let Formula::Iff(v, e) = f else { continue };
                if known.contains(v) || !e.vars().iter().all(|x| known.contains(x)) {
                    continue;
                }
                known.bind(v.clone(), e.eval(&known)?)?;
                progress = true;
            }
            let mut still = Vec::new();
            for n in pending {
                if !n.dep_vars().all(|d| known.contains(d)) {
                    still.push(n);
                    continue;
                }
                let Some(req) = verify_requests(&[n], &known, |_| Ok(true))?.pop() else {
                    continue;
                };
                let Some(judgments) = run.verify(self.backend, &req)? else {
                    return Ok(CheckStatus::Timeout);
                };
                let predicted = judgments
                    .iter()
                    .find(|j| j.id == n.id)
                    .map(|j| j.predicted)
                    .ok_or_else(|| crate::error::OracleError::MalformedResponse(format!("missing id {}", n.id)))?;
                match known.get_bool(&n.out_var) {
                    Some(b) if b != predicted => return Ok(CheckStatus::Unsat),
                    Some(_) => {}
                    None => known.bind(n.out_var.clone(), predicted)?,
                }
                progress = true;
            }
            pending = still;
            if pending.is_empty() && !progress {
                break;
            }
            if !progress {
                // Remaining constraints read free booleans: take them from a model.
                session.freeze(&known.booleans())?;
                if run.expired() {
                    return Ok(CheckStatus::Timeout);
                }
                let Some(model) = session.propose_model() else {
                    return Ok(CheckStatus::Unsat);
                };
                let before = known.len();
                for n in &pending {
                    for d in n.dep_vars() {
                        if let (false, Some(b)) = (known.contains(d), model.get_bool(d)) {
                            known.bind(d, b)?;
                        }
                    }
                }
                if known.len() == before {
                    let missing = pending.iter().flat_map(|n| n.dep_vars()).find(|d| !known.contains(d));
                    return Err(ModelError::UnboundVar(missing.unwrap_or_default().to_string()).into());
                }
            }
        }
        session.freeze(&known.booleans())?;
        if run.expired() {
            return Ok(CheckStatus::Timeout);
        }
        let Some(model) = session.propose_model() else {
            return Ok(CheckStatus::Unsat);
        };
        run.record(|| TraceEvent::Propose { model: model.clone() });
        Ok(CheckStatus::Sat(crate::model::merge_assignments(&known, &model)?))
    }

    /// The propose/realize/block loop, whatever is bound in `pi`.
    pub fn generate(&self, pi: &Assignment) -> Result<CheckOutcome, CheckError> {
        self.validate(pi)?;
        let mut run = self.run();
        let mut search = Search::new(self, pi)?;
        let status = match search.next(&mut run)? {
            Step::Sat(total, _) => CheckStatus::Sat(total),
            Step::Unsat => CheckStatus::Unsat,
            Step::Timeout => CheckStatus::Timeout,
        };
        Ok(CheckOutcome {
            status,
            diagnostics: run.finish(),
        })
    }

    /// Enumerates solutions with pairwise-distinct projections.
    pub fn cover(&self, pi: &Assignment) -> Result<CoverOutcome, CheckError> {
        self.validate(pi)?;
        let mut run = self.run();
        let mut search = Search::new(self, pi)?;
        let mut solutions = Vec::new();
        let status = loop {
            if self.config.cover_limit.is_some_and(|l| solutions.len() >= l) {
                break CoverStatus::Limit;
            }
            match search.next(&mut run)? {
                Step::Sat(total, model) => {
                    let blocked = model.project(search.session.projection().iter().map(String::as_str));
                    search.session.block_model(&model);
                    run.record(|| TraceEvent::Block {
                        reason: BlockReason::Cover,
                        blocked,
                    });
                    solutions.push(total);
                }
                Step::Unsat => break CoverStatus::Exhausted,
                Step::Timeout => break CoverStatus::Timeout,
            }
        };
        Ok(CoverOutcome {
            solutions,
            status,
            diagnostics: run.finish(),
            projection: search.session.projection().to_vec(),
        })
    }
}

/// Generation state carried across models.
struct Search<'c, 'a> {
    checker: &'c Checker<'a>,
    pi: Assignment,
    session: SolverSession,
    /// Per unbound string variable, the constraints solved together with it.
    groups: Vec<(&'a str, Vec<Nltc>)>,
    /// Constraints reading no unbound string; checked against each model.
    post: Vec<&'a Nltc>,
}

impl<'c, 'a> Search<'c, 'a> {
    fn new(checker: &'c Checker<'a>, pi: &Assignment) -> Result<Self, CheckError> {
        let doc = checker.doc;
        let mut session = SolverSession::new(&doc.formulas, doc.bool_vars.iter().map(String::as_str))?;
        session.freeze(pi)?;
        let projection = match &checker.config.cover_vars {
            Some(vars) => {
                for v in vars {
                    if doc.kind_of(v) != Some(VarKind::Bool) {
                        return Err(ModelError::TypeMismatch {
                            var: v.clone(),
                            expected: VarKind::Bool,
                        }
                        .into());
                    }
                }
                vars.clone()
            }
            None => decision_projection(doc, pi),
        };
        session.set_projection(projection.iter().map(String::as_str))?;

        let unbound = checker.unbound_strings(pi);
        let mut groups: Vec<(&str, Vec<Nltc>)> = unbound.iter().map(|u| (*u, Vec::new())).collect();
        let mut post = Vec::new();
        for n in &doc.nltcs {
            // A constraint reading several unbound strings is solved with the last of them.
            match groups.iter_mut().rev().find(|(u, _)| n.reads(u)) {
                Some((_, group)) => group.push(n.clone()),
                None => post.push(n),
            }
        }
        Ok(Search {
            checker,
            pi: pi.clone(),
            session,
            groups,
            post,
        })
    }

    fn block(&mut self, run: &RunContext<'_>, reason: BlockReason, partial: Assignment) -> Result<(), CheckError> {
        self.session.block(&partial)?;
        run.record(|| TraceEvent::Block {
            reason,
            blocked: partial,
        });
        Ok(())
    }

    /// Next solution as (total assignment, boolean model).
    fn next(&mut self, run: &mut RunContext<'a>) -> Result<Step, CheckError> {
        let (backend, config, cache) = (self.checker.backend, self.checker.config, self.checker.cache);
        'models: loop {
            if run.expired() {
                return Ok(Step::Timeout);
            }
            let Some(model) = self.session.propose_model() else {
                return Ok(Step::Unsat);
            };
            run.diagnostics.iterations += 1;
            run.record(|| TraceEvent::Propose { model: model.clone() });
            let mut values = crate::model::merge_assignments(&self.pi, &model)?;

            for (u, group) in &self.groups {
                if group.is_empty() {
                    values.bind(*u, "")?;
                    continue;
                }
                match nlsolve_with(u, group, &values, backend, config, cache, run)? {
                    NlOutcome::Solved { text, .. } => values.bind(*u, text)?,
                    NlOutcome::TimedOut => return Ok(Step::Timeout),
                    NlOutcome::Unrealized(_) => {
                        let blocked = model.project(self.session.projection().iter().map(String::as_str));
                        self.block(run, BlockReason::Nlsolve, blocked)?;
                        continue 'models;
                    }
                }
            }

            let requests = verify_requests(&self.post, &values, |n| {
                values
                    .get_bool(&n.out_var)
                    .ok_or_else(|| ModelError::UnboundVar(n.out_var.clone()))
            })?;
            let mut explanations = Vec::new();
            for req in requests {
                let Some(judgments) = run.verify(backend, &req)? else {
                    return Ok(Step::Timeout);
                };
                for j in judgments.iter().filter(|j| !j.matches()) {
                    let Some(n) = self.post.iter().find(|n| n.id == j.id) else {
                        continue;
                    };
                    // The verdict depends only on these values, so any model sharing them fails too.
                    let vars = std::iter::once(n.out_var.as_str()).chain(n.dep_vars());
                    explanations.push(model.project(vars));
                }
            }
            if explanations.is_empty() {
                return Ok(Step::Sat(values, model));
            }
            for e in explanations {
                self.block(run, BlockReason::PostVerify, e)?;
            }
        }
    }
}

pub fn check(
    doc: &ParsedDocument,
    pi: &Assignment,
    config: &SolverConfig,
    backend: &dyn Oracle,
    cache: &NlCache,
) -> Result<CheckOutcome, CheckError> {
    Checker::new(doc, config, backend, cache).check(pi)
}

pub fn check_cover(
    doc: &ParsedDocument,
    pi: &Assignment,
    config: &SolverConfig,
    backend: &dyn Oracle,
    cache: &NlCache,
) -> Result<CoverOutcome, CheckError> {
    Checker::new(doc, config, backend, cache).cover(pi)
}
