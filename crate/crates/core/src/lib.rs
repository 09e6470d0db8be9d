//! Logitext: documents that mix prose clauses with propositional constraints,
//! solved by pairing a propositional model finder with a propose/verify text
//! theory backed by a pluggable oracle.

pub mod check;
pub mod cli;
pub mod error;
pub mod gaps;
pub mod logic;
pub mod model;
pub mod oracle;
pub mod parser;
pub mod theory;
pub mod trace;

pub use error::{ModelError, ParseError, Pos};
pub use model::{
    eval_formula, merge_assignments, Assignment, Block, BlockKind, CheckOutcome, CheckStatus, Dependency, Diagnostics,
    Formula, Nltc, ParsedDocument, RawDocument, SolverConfig, Value, VarDecl, VarKind, VerifyJudgment, Warning,
};
pub use parser::parse_document;
