//! Text-reasoning backends. An oracle answers two questions: *propose* a text
//! that gives each constraint its target truth value, and *verify* which
//! constraints a candidate text actually satisfies.

mod prompt;
mod remote;
mod response;
mod scripted;

pub use prompt::{build_propose_prompt, build_verify_prompt, escape_candidate, Prompt, PROPOSE_SYSTEM, VERIFY_SYSTEM};
pub use remote::{RemoteConfig, RemoteOracle, DEFAULT_API_KEY_ENV, DEFAULT_ENDPOINT, DEFAULT_MODEL};
pub use response::parse_verify_response;
pub use scripted::{OracleScript, ScriptedOracle, FILLER, REFUSAL_SENTINEL};

use crate::error::OracleError;
use crate::model::{Assignment, Nltc, VerifyJudgment};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RequestKind {
    Propose,
    Verify,
}

/// A constraint paired with the truth value it should take.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetedConstraint {
    pub nltc: Nltc,
    pub target: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleRequest {
    pub kind: RequestKind,
    /// String variable being generated (propose) or filled by the candidate (verify).
    pub subject: Option<String>,
    pub constraints: Vec<TargetedConstraint>,
    /// Values of the other variables the constraints read.
    pub context: Assignment,
    pub candidate: Option<String>,
    pub failed: Vec<VerifyJudgment>,
    pub history: Vec<String>,
}

impl OracleRequest {
    pub fn propose(
        subject: impl Into<String>,
        constraints: Vec<TargetedConstraint>,
        context: Assignment,
    ) -> Result<Self, OracleError> {
        if constraints.is_empty() {
            return Err(OracleError::NoConstraints);
        }
        Ok(OracleRequest {
            kind: RequestKind::Propose,
            subject: Some(subject.into()),
            constraints,
            context,
            candidate: None,
            failed: Vec::new(),
            history: Vec::new(),
        })
    }

    /// Adds refinement feedback to a propose request.
    pub fn refine(mut self, failed: Vec<VerifyJudgment>, history: Vec<String>) -> Self {
        self.failed = failed;
        self.history = history;
        self
    }

    pub fn verify(
        subject: Option<String>,
        constraints: Vec<TargetedConstraint>,
        context: Assignment,
        candidate: impl Into<String>,
    ) -> Result<Self, OracleError> {
        if constraints.is_empty() {
            return Err(OracleError::NoConstraints);
        }
        Ok(OracleRequest {
            kind: RequestKind::Verify,
            subject,
            constraints,
            context,
            candidate: Some(candidate.into()),
            failed: Vec::new(),
            history: Vec::new(),
        })
    }

    pub fn ids(&self) -> Vec<&str> {
        self.constraints.iter().map(|c| c.nltc.id.as_str()).collect()
    }
}

/// A propose/verify backend. Implementations must be usable from several threads.
pub trait Oracle: Send + Sync {
    fn propose(&self, req: &OracleRequest) -> Result<String, OracleError>;

    fn verify(&self, req: &OracleRequest) -> Result<Vec<VerifyJudgment>, OracleError>;
}

pub fn oracle_propose(backend: &dyn Oracle, req: &OracleRequest) -> Result<String, OracleError> {
    debug_assert_eq!(req.kind, RequestKind::Propose);
    backend.propose(req)
}

pub fn oracle_verify(backend: &dyn Oracle, req: &OracleRequest) -> Result<Vec<VerifyJudgment>, OracleError> {
    if req.candidate.is_none() {
        return Err(OracleError::MissingCandidate);
    }
    backend.verify(req)
}
