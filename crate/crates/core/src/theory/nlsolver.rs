use std::time::{Duration, Instant};

use super::cache::{CacheKey, NlCache};
use crate::error::{CheckError, ModelError};
use crate::model::{Assignment, Diagnostics, Nltc, SolverConfig, Value, VerifyJudgment};
use crate::oracle::{oracle_propose, oracle_verify, Oracle, OracleRequest, TargetedConstraint};
use crate::trace::{emit, Trace, TraceEvent};

/// Counters, deadline and trace shared by every step of one solver run.
#[derive(Debug)]
pub struct RunContext<'t> {
    pub diagnostics: Diagnostics,
    deadline: Option<Instant>,
    started: Instant,
    trace: Option<&'t Trace>,
}

impl<'t> RunContext<'t> {
    pub fn new(timeout: Option<Duration>) -> Self {
        let started = Instant::now();
        RunContext {
            diagnostics: Diagnostics::default(),
            deadline: timeout.map(|t| started + t),
            started,
            trace: None,
        }
    }

    pub fn with_trace(mut self, trace: Option<&'t Trace>) -> Self {
        self.trace = trace;
        self
    }

    pub fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    pub fn trace(&self) -> Option<&'t Trace> {
        self.trace
    }

    pub fn record(&self, event: impl FnOnce() -> TraceEvent) {
        emit(self.trace, event);
    }

    /// Stamps elapsed time into the diagnostics and returns them.
    pub fn finish(&mut self) -> Diagnostics {
        self.diagnostics.wall_clock = self.started.elapsed();
        self.diagnostics.clone()
    }

    /// Propose call, or `None` once the deadline has passed.
    pub fn propose(&mut self, backend: &dyn Oracle, req: &OracleRequest) -> Result<Option<String>, CheckError> {
        if self.expired() {
            return Ok(None);
        }
        self.diagnostics.propose_calls += 1;
        self.diagnostics.oracle_calls += 1;
        Ok(Some(oracle_propose(backend, req)?))
    }

    /// Verify call, or `None` once the deadline has passed.
    pub fn verify(
        &mut self,
        backend: &dyn Oracle,
        req: &OracleRequest,
    ) -> Result<Option<Vec<VerifyJudgment>>, CheckError> {
        if self.expired() {
            return Ok(None);
        }
        self.diagnostics.verify_calls += 1;
        self.diagnostics.oracle_calls += 1;
        let judgments = oracle_verify(backend, req)?;
        self.record(|| TraceEvent::VerifyBatch {
            subject: req.subject.clone(),
            ids: req.ids().into_iter().map(str::to_string).collect(),
            mismatches: judgments.iter().filter(|j| !j.matches()).count(),
        });
        Ok(Some(judgments))
    }
}

/// Refinement history of one search: each tried text with the constraints it failed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchState {
    pub history: Vec<(String, Vec<VerifyJudgment>)>,
    pub round: usize,
    pub last_judgments: Vec<VerifyJudgment>,
}

impl SearchState {
    pub fn texts(&self) -> Vec<String> {
        self.history.iter().map(|(t, _)| t.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NlOutcome {
    Solved { text: String, rounds: usize, cached: bool },
    Unrealized(SearchState),
    TimedOut,
}

impl NlOutcome {
    pub fn text(&self) -> Option<&str> {
        match self {
            NlOutcome::Solved { text, .. } => Some(text),
            _ => None,
        }
    }
}

fn requests(var: &str, nltcs: &[Nltc], pi: &Assignment) -> Result<(Vec<TargetedConstraint>, Assignment), CheckError> {
    let mut constraints = Vec::with_capacity(nltcs.len());
    for n in nltcs {
        if !n.reads(var) {
            return Err(ModelError::InvalidConfig(format!("constraint {} does not read {var}", n.id)).into());
        }
        let target = pi
            .get_bool(&n.out_var)
            .ok_or_else(|| ModelError::UnboundVar(n.out_var.clone()))?;
        constraints.push(TargetedConstraint {
            nltc: n.clone(),
            target,
        });
    }
    let context = pi.filter(|name, _| name != var && nltcs.iter().any(|n| n.reads(name)));
    Ok((constraints, context))
}

/// `pi` with each failed output replaced by what the oracle actually saw.
fn realized(pi: &Assignment, nltcs: &[Nltc], failed: &[VerifyJudgment]) -> Assignment {
    let mut out = pi.clone();
    for j in failed {
        if let Some(n) = nltcs.iter().find(|n| n.id == j.id) {
            out.remove(&n.out_var);
            out.bind(n.out_var.clone(), Value::Bool(j.predicted))
                .expect("rebinding a removed variable");
        }
    }
    out
}

/// Searches for a value of string variable `var` under which every constraint
/// in `nltcs` takes the truth value `pi` gives its output.
pub fn nlsolve_with(
    var: &str,
    nltcs: &[Nltc],
    pi: &Assignment,
    backend: &dyn Oracle,
    config: &SolverConfig,
    cache: &NlCache,
    run: &mut RunContext<'_>,
) -> Result<NlOutcome, CheckError> {
    let (constraints, context) = requests(var, nltcs, pi)?;
    let key = CacheKey::new(var, nltcs, pi);
    if let Some(text) = cache.lookup(&key) {
        run.diagnostics.cache_hits += 1;
        run.record(|| TraceEvent::CacheHit {
            var: var.into(),
            exact: true,
        });
        return Ok(NlOutcome::Solved {
            text,
            rounds: 0,
            cached: true,
        });
    }

    let propose_req = OracleRequest::propose(var, constraints.clone(), context.clone())?;
    let mut candidate = match cache.closest(&key) {
        Some(text) => {
            run.record(|| TraceEvent::CacheHit {
                var: var.into(),
                exact: false,
            });
            text
        }
        None => match run.propose(backend, &propose_req)? {
            Some(text) => text,
            None => return Ok(NlOutcome::TimedOut),
        },
    };

    let mut state = SearchState::default();
    for round in 1..=config.max_refinements {
        state.round = round;
        let verify_req = OracleRequest::verify(
            Some(var.into()),
            constraints.clone(),
            context.clone(),
            candidate.clone(),
        )?;
        let Some(judgments) = run.verify(backend, &verify_req)? else {
            return Ok(NlOutcome::TimedOut);
        };
        let failed: Vec<VerifyJudgment> = judgments.iter().filter(|j| !j.matches()).cloned().collect();
        run.record(|| TraceEvent::NlsolveRound {
            var: var.into(),
            round,
            candidate: candidate.clone(),
            failed: failed.iter().map(|j| j.id.clone()).collect(),
        });
        cache.insert(
            CacheKey::new(var, nltcs, &realized(pi, nltcs, &failed)),
            candidate.clone(),
        )?;
        if failed.is_empty() {
            return Ok(NlOutcome::Solved {
                text: candidate,
                rounds: round,
                cached: false,
            });
        }
        state.history.push((candidate.clone(), failed.clone()));
        state.last_judgments = judgments;
        if round == config.max_refinements {
            break;
        }
        let refine = propose_req.clone().refine(failed, state.texts());
        candidate = match run.propose(backend, &refine)? {
            Some(text) => text,
            None => return Ok(NlOutcome::TimedOut),
        };
    }
    Ok(NlOutcome::Unrealized(state))
}

/// [`nlsolve_with`] without a deadline or trace; `None` when no text was found.
pub fn nlsolve(
    var: &str,
    nltcs: &[Nltc],
    pi: &Assignment,
    backend: &dyn Oracle,
    config: &SolverConfig,
    cache: &NlCache,
) -> Result<Option<String>, CheckError> {
    let mut run = RunContext::new(None);
    Ok(nlsolve_with(var, nltcs, pi, backend, config, cache, &mut run)?
        .text()
        .map(str::to_string))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dependency;
    use crate::oracle::{OracleScript, ScriptedOracle};
    use std::sync::Arc;

    fn nltc(id: &str) -> Nltc {
        Nltc {
            id: id.into(),
            out_var: id.into(),
            clause: format!("clause {id}"),
            deps: vec![Dependency {
                phrase: "message".into(),
                var: "M".into(),
            }],
            doc_context: Arc::from(""),
        }
    }

    fn oracle(refuse: bool) -> ScriptedOracle {
        let mut script =
            OracleScript::from_json(r#"{"rules": {"A": ["alpha"], "B": ["beta"], "C": ["gamma"]}}"#).unwrap();
        if refuse {
            script.refusals.push(vec![("A".into(), true), ("B".into(), true)]);
        }
        ScriptedOracle::new(script)
    }

    fn pi(a: bool, b: bool, c: bool) -> Assignment {
        Assignment::new().with("A", a).with("B", b).with("C", c)
    }

    fn set() -> Vec<Nltc> {
        ["A", "B", "C"].into_iter().map(nltc).collect()
    }

    #[test]
    fn solves_in_one_round_and_then_hits_the_cache() {
        let (o, cache, cfg) = (oracle(false), NlCache::in_memory(), SolverConfig::default());
        let mut run = RunContext::new(None);
        let out = nlsolve_with("M", &set(), &pi(true, false, true), &o, &cfg, &cache, &mut run).unwrap();
        assert_eq!(
            out,
            NlOutcome::Solved {
                text: "alpha gamma msg".into(),
                rounds: 1,
                cached: false
            }
        );
        assert_eq!((run.diagnostics.propose_calls, run.diagnostics.verify_calls), (1, 1));

        let mut again = RunContext::new(None);
        let out = nlsolve_with("M", &set(), &pi(true, false, true), &o, &cfg, &cache, &mut again).unwrap();
        assert!(matches!(out, NlOutcome::Solved { cached: true, .. }));
        assert_eq!((again.diagnostics.oracle_calls, again.diagnostics.cache_hits), (0, 1));
    }

    #[test]
    fn refusal_exhausts_exactly_t_rounds() {
        let cfg = SolverConfig {
            max_refinements: 3,
            ..SolverConfig::default()
        };
        let (o, cache) = (oracle(true), NlCache::in_memory());
        let mut run = RunContext::new(None);
        let NlOutcome::Unrealized(state) =
            nlsolve_with("M", &set(), &pi(true, true, false), &o, &cfg, &cache, &mut run).unwrap()
        else {
            panic!("expected failure");
        };
        assert_eq!(state.history.len(), 3);
        assert_eq!((run.diagnostics.propose_calls, run.diagnostics.verify_calls), (3, 3));
        let texts = state.texts();
        let mut unique = texts.clone();
        unique.dedup();
        assert_eq!(unique.len(), texts.len());
    }

    #[test]
    fn failed_rounds_are_cached_under_the_observed_context() {
        let (o, cache, cfg) = (oracle(true), NlCache::in_memory(), SolverConfig::default());
        assert_eq!(
            nlsolve("M", &set(), &pi(true, true, false), &o, &cfg, &cache).unwrap(),
            None
        );
        // The sentinel text realizes the complement of every target.
        let observed = CacheKey::new("M", &set(), &pi(false, false, true));
        assert!(cache.lookup(&observed).unwrap().starts_with("UNREALIZABLE"));
    }

    #[test]
    fn partial_match_seeds_without_a_propose() {
        let (o, cache, cfg) = (oracle(false), NlCache::in_memory(), SolverConfig::default());
        nlsolve("M", &set(), &pi(true, false, false), &o, &cfg, &cache).unwrap();
        let mut run = RunContext::new(None);
        let out = nlsolve_with("M", &set(), &pi(true, true, false), &o, &cfg, &cache, &mut run).unwrap();
        assert_eq!(out.text(), Some("beta alpha msg"));
        assert_eq!((run.diagnostics.propose_calls, run.diagnostics.verify_calls), (1, 2));
    }

    #[test]
    fn unbound_targets_are_rejected() {
        let (o, cache, cfg) = (oracle(false), NlCache::in_memory(), SolverConfig::default());
        let partial = Assignment::new().with("A", true);
        assert!(matches!(
            nlsolve("M", &set(), &partial, &o, &cfg, &cache),
            Err(CheckError::Input(ModelError::UnboundVar(_)))
        ));
    }

    #[test]
    fn expired_deadline_times_out_before_calling_the_oracle() {
        let (o, cache, cfg) = (oracle(false), NlCache::in_memory(), SolverConfig::default());
        let mut run = RunContext::new(Some(Duration::ZERO));
        let out = nlsolve_with("M", &set(), &pi(true, false, false), &o, &cfg, &cache, &mut run).unwrap();
        assert_eq!(out, NlOutcome::TimedOut);
        assert_eq!(run.diagnostics.oracle_calls, 0);
    }
}
