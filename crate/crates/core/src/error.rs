use std::fmt;

use thiserror::Error;

use crate::model::VarKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("conflicting values for variable `{0}`")]
    Conflict(String),
    #[error("variable `{0}` is not bound")]
    UnboundVar(String),
    #[error("variable `{0}` is not declared")]
    UnknownVar(String),
    #[error("variable `{0}` is declared more than once")]
    DuplicateVar(String),
    #[error("variable `{var}` must hold a {expected:?} value")]
    TypeMismatch { var: String, expected: VarKind },
    #[error("constraint `{0}` has an empty clause")]
    EmptyClause(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// 1-based line and column of a byte offset in the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl Pos {
    pub fn of(source: &str, offset: usize) -> Pos {
        let offset = offset.min(source.len());
        let before = &source[..offset];
        let line = before.matches('\n').count() + 1;
        let column = before
            .rfind('\n')
            .map_or(before.chars().count(), |i| before[i + 1..].chars().count())
            + 1;
        Pos { line, column }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("document is empty")]
    EmptyDocument,
    #[error("{0}: unterminated code fence")]
    UnterminatedFence(Pos),
    #[error("variable `{0}` is declared more than once")]
    DuplicateDecl(String),
    #[error("{pos}: `{token}` is not a valid identifier")]
    BadIdentifier { token: String, pos: Pos },
    #[error("{0}: expected a clause in [[ ... ]]")]
    MissingClauseBrackets(Pos),
    #[error("{0}: expected `\"phrase\" is <variable>` after `where`")]
    MissingWhereTarget(Pos),
    #[error("{0}: malformed quoted phrase")]
    BadQuote(Pos),
    #[error("{0}: quantifier has no [[ ... ]] items")]
    EmptyQuantifier(Pos),
    #[error("{0}: quantifiers cannot be nested")]
    NestedQuantifier(Pos),
    #[error("{0}: at most one quantifier is allowed per clause")]
    MultipleQuantifiers(Pos),
    #[error("{0}: quantifiers must appear inside a let clause")]
    StrayQuantifier(Pos),
    #[error("{pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: unknown operator `{token}`")]
    UnknownOperator { token: String, pos: Pos },
    #[error("variable `{0}` is not declared")]
    UnresolvedVar(String),
    #[error("string variable `{0}` cannot appear in a logical constraint")]
    StringInFormula(String),
    #[error("variable `{0}` is bound by more than one let")]
    DuplicateLet(String),
    #[error("let-bound variable `{0}` must be boolean")]
    StringLetTarget(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ParseError {
    pub fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            pos,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no constraints given to the oracle")]
    NoConstraints,
    #[error("verify request carries no candidate text")]
    MissingCandidate,
    #[error("malformed oracle response: {0}")]
    MalformedResponse(String),
    #[error("oracle transport failed: {0}")]
    Transport(String),
    #[error("oracle configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Input(#[from] ModelError),
    #[error("cache i/o: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum GapError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("no instances to score")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
}
