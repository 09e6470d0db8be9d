//! Domain types shared by the parser, the solvers, the oracles and the CLI.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Text,
    Code,
    Decl,
}

/// One segment of a source document. `payload` excludes code fences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub kind: BlockKind,
    pub span: Range<usize>,
    pub payload: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub source: Arc<str>,
    pub blocks: Vec<Block>,
}

impl RawDocument {
    pub fn blocks_of(&self, kind: BlockKind) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(move |b| b.kind == kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Bool,
    Str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarDecl {
    pub name: String,
    pub kind: VarKind,
}

/// Boolean constraint AST. `v = expr` statements are housed as `Iff(v, expr)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Var(String),
    Const(bool),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Iff(String, Box<Formula>),
}

impl Formula {
    pub fn var(name: impl Into<String>) -> Self {
        Formula::Var(name.into())
    }

    pub fn negate(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn iff(lhs: impl Into<String>, rhs: Formula) -> Self {
        Formula::Iff(lhs.into(), Box::new(rhs))
    }

    /// Conjunction; a single child collapses to itself.
    pub fn and(mut children: Vec<Formula>) -> Self {
        match children.len() {
            0 => Formula::Const(true),
            1 => children.pop().unwrap(),
            _ => Formula::And(children),
        }
    }

    /// Disjunction; a single child collapses to itself.
    pub fn or(mut children: Vec<Formula>) -> Self {
        match children.len() {
            0 => Formula::Const(false),
            1 => children.pop().unwrap(),
            _ => Formula::Or(children),
        }
    }

    /// Every variable name mentioned, including the left side of `Iff`.
    pub fn vars(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Formula::Var(name) => {
                out.insert(name);
            }
            Formula::Const(_) => {}
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
            Formula::Iff(lhs, rhs) => {
                out.insert(lhs);
                rhs.collect_vars(out);
            }
        }
    }

    /// Boolean evaluation under `a`; every referenced variable must be bound to a bool.
    pub fn eval(&self, a: &Assignment) -> Result<bool, ModelError> {
        let lookup = |name: &str| match a.get(name) {
            Some(Value::Bool(b)) => Ok(*b),
            Some(Value::Str(_)) => Err(ModelError::TypeMismatch {
                var: name.to_string(),
                expected: VarKind::Bool,
            }),
            None => Err(ModelError::UnboundVar(name.to_string())),
        };
        Ok(match self {
            Formula::Var(name) => lookup(name)?,
            Formula::Const(b) => *b,
            Formula::Not(f) => !f.eval(a)?,
            Formula::And(fs) => {
                let mut acc = true;
                for f in fs {
                    acc &= f.eval(a)?;
                }
                acc
            }
            Formula::Or(fs) => {
                let mut acc = false;
                for f in fs {
                    acc |= f.eval(a)?;
                }
                acc
            }
            Formula::Iff(lhs, rhs) => lookup(lhs)? == rhs.eval(a)?,
        })
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        // 0: top, 1: or, 2: and, 3: not
        let join = |f: &mut fmt::Formatter<'_>, fs: &[Formula], op: &str, prec: u8| {
            if parent > prec {
                write!(f, "(")?;
            }
            for (i, c) in fs.iter().enumerate() {
                if i > 0 {
                    write!(f, " {op} ")?;
                }
                c.fmt_prec(f, prec + 1)?;
            }
            if parent > prec {
                write!(f, ")")?;
            }
            Ok(())
        };
        match self {
            Formula::Var(name) => write!(f, "{name}"),
            Formula::Const(true) => write!(f, "True"),
            Formula::Const(false) => write!(f, "False"),
            Formula::Not(inner) => {
                write!(f, "not ")?;
                inner.fmt_prec(f, 3)
            }
            Formula::And(fs) => join(f, fs, "and", 1),
            Formula::Or(fs) => join(f, fs, "or", 0),
            Formula::Iff(lhs, rhs) => {
                if parent > 0 {
                    write!(f, "({lhs} = ")?;
                    rhs.fmt_prec(f, 0)?;
                    write!(f, ")")
                } else {
                    write!(f, "{lhs} = ")?;
                    rhs.fmt_prec(f, 0)
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// A quoted sub-clause bound to a variable (`"message" is M`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dependency {
    pub phrase: String,
    pub var: String,
}

/// A natural-language text constraint: a clause whose truth defines `out_var`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Nltc {
    pub id: String,
    pub out_var: String,
    pub clause: String,
    pub deps: Vec<Dependency>,
    #[serde(skip)]
    pub doc_context: Arc<str>,
}

impl Nltc {
    pub fn reads(&self, var: &str) -> bool {
        self.deps.iter().any(|d| d.var == var)
    }

    pub fn dep_vars(&self) -> impl Iterator<Item = &str> {
        self.deps.iter().map(|d| d.var.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Warning {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "warning {}:{}: {}", self.line, self.column, self.message)
    }
}

/// A parsed document: boolean variables, string variables, formulas and text constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedDocument {
    pub bool_vars: BTreeSet<String>,
    pub string_vars: BTreeSet<String>,
    pub formulas: Vec<Formula>,
    pub nltcs: Vec<Nltc>,
    /// Let-bound variables in source order. Quantifier hosts appear here
    /// in place of their expanded children.
    pub criteria: Vec<String>,
    pub warnings: Vec<Warning>,
    pub source: RawDocument,
}

impl ParsedDocument {
    pub fn kind_of(&self, var: &str) -> Option<VarKind> {
        if self.bool_vars.contains(var) {
            Some(VarKind::Bool)
        } else if self.string_vars.contains(var) {
            Some(VarKind::Str)
        } else {
            None
        }
    }

    pub fn nltc(&self, id: &str) -> Option<&Nltc> {
        self.nltcs.iter().find(|n| n.id == id)
    }

    /// Checks the structural invariants every parsed document must hold.
    pub fn validate(&self) -> Result<(), ModelError> {
        if let Some(v) = self.bool_vars.intersection(&self.string_vars).next() {
            return Err(ModelError::DuplicateVar(v.clone()));
        }
        for f in &self.formulas {
            for v in f.vars() {
                match self.kind_of(v) {
                    Some(VarKind::Bool) => {}
                    Some(VarKind::Str) => {
                        return Err(ModelError::TypeMismatch {
                            var: v.to_string(),
                            expected: VarKind::Bool,
                        })
                    }
                    None => return Err(ModelError::UnboundVar(v.to_string())),
                }
            }
        }
        let mut ids = BTreeSet::new();
        for n in &self.nltcs {
            if !ids.insert(n.id.as_str()) {
                return Err(ModelError::DuplicateVar(n.id.clone()));
            }
            if !self.bool_vars.contains(&n.out_var) {
                return Err(ModelError::TypeMismatch {
                    var: n.out_var.clone(),
                    expected: VarKind::Bool,
                });
            }
            if n.clause.is_empty() {
                return Err(ModelError::EmptyClause(n.id.clone()));
            }
            for d in n.dep_vars() {
                if self.kind_of(d).is_none() {
                    return Err(ModelError::UnboundVar(d.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Checks that `a` binds only declared variables with values of the declared kind.
    pub fn type_check(&self, a: &Assignment) -> Result<(), ModelError> {
        for (name, value) in a.iter() {
            let expected = self.kind_of(name).ok_or_else(|| ModelError::UnknownVar(name.clone()))?;
            if value.kind() != expected {
                return Err(ModelError::TypeMismatch {
                    var: name.clone(),
                    expected,
                });
            }
        }
        Ok(())
    }

    /// Canonical single-line JSON rendering with sorted variable names.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "bool_vars": self.bool_vars,
            "string_vars": self.string_vars,
            "formulas": self.formulas.iter().map(|f| serde_json::json!({
                "text": f.to_string(),
                "ast": f,
            })).collect::<Vec<_>>(),
            "nltcs": self.nltcs,
            "criteria": self.criteria,
            "warnings": self.warnings,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Str(String),
}

impl Value {
    pub fn kind(&self) -> VarKind {
        match self {
            Value::Bool(_) => VarKind::Bool,
            Value::Str(_) => VarKind::Str,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            Value::Bool(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{}", serde_json::to_string(s).map_err(|_| fmt::Error)?),
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Str(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Str(s)
    }
}

/// Partial or total map from variable names to values. Iteration is sorted by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    bindings: BTreeMap<String, Value>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name)
    }

    pub fn get_bool(&self, name: &str) -> Option<bool> {
        self.get(name).and_then(Value::as_bool)
    }

    pub fn get_str(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(Value::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.bindings.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.bindings.iter()
    }

    /// Binds `name`, failing if it is already bound to a different value.
    pub fn bind(&mut self, name: impl Into<String>, value: impl Into<Value>) -> Result<(), ModelError> {
        let name = name.into();
        let value = value.into();
        match self.bindings.get(&name) {
            Some(existing) if *existing != value => Err(ModelError::Conflict(name)),
            Some(_) => Ok(()),
            None => {
                self.bindings.insert(name, value);
                Ok(())
            }
        }
    }

    /// Builder-style `bind` for literals in tests and examples. Panics on conflict.
    pub fn with(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.bind(name, value).expect("conflicting binding");
        self
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.bindings.remove(name)
    }

    /// Only the boolean bindings.
    pub fn booleans(&self) -> Assignment {
        self.filter(|_, v| v.kind() == VarKind::Bool)
    }

    pub fn filter(&self, mut keep: impl FnMut(&str, &Value) -> bool) -> Assignment {
        Assignment {
            bindings: self
                .bindings
                .iter()
                .filter(|(k, v)| keep(k, v))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Restriction to the given variable names (unbound names are skipped).
    pub fn project<'a>(&self, vars: impl IntoIterator<Item = &'a str>) -> Assignment {
        let mut out = Assignment::new();
        for v in vars {
            if let Some(value) = self.bindings.get(v) {
                out.bindings.insert(v.to_string(), value.clone());
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("assignment serializes")
    }
}

impl FromIterator<(String, Value)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Assignment {
            bindings: iter.into_iter().collect(),
        }
    }
}

/// Union of two assignments; binding one variable to two different values is a conflict.
pub fn merge_assignments(a: &Assignment, b: &Assignment) -> Result<Assignment, ModelError> {
    let mut out = a.clone();
    for (k, v) in b.iter() {
        out.bind(k.clone(), v.clone())?;
    }
    Ok(out)
}

pub fn eval_formula(f: &Formula, a: &Assignment) -> Result<bool, ModelError> {
    f.eval(a)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub oracle_calls: usize,
    pub propose_calls: usize,
    pub verify_calls: usize,
    pub cache_hits: usize,
    #[serde(skip)]
    pub wall_clock: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckStatus {
    Sat(Assignment),
    Unsat,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub status: CheckStatus,
    pub diagnostics: Diagnostics,
}

impl CheckOutcome {
    pub fn assignment(&self) -> Option<&Assignment> {
        match &self.status {
            CheckStatus::Sat(a) => Some(a),
            _ => None,
        }
    }

    pub fn is_sat(&self) -> bool {
        matches!(self.status, CheckStatus::Sat(_))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::json!({
            "status": match self.status {
                CheckStatus::Sat(_) => "sat",
                CheckStatus::Unsat => "unsat",
                CheckStatus::Timeout => "timeout",
            },
            "diagnostics": self.diagnostics,
        });
        if let CheckStatus::Sat(a) = &self.status {
            obj["assignment"] = a.to_json();
        }
        obj
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub max_refinements: usize,
    pub timeout: Duration,
    pub cover: bool,
    pub cover_limit: Option<usize>,
    /// Variables whose combinations distinguish cover results. `None` derives
    /// them from the document and the input assignment.
    pub cover_vars: Option<Vec<String>>,
    pub seed: u64,
    pub cache_path: Option<std::path::PathBuf>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_refinements: 5,
            timeout: Duration::from_secs(3000),
            cover: false,
            cover_limit: None,
            cover_vars: None,
            seed: 0,
            cache_path: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.max_refinements == 0 {
            return Err(ModelError::InvalidConfig("max_refinements must be at least 1".into()));
        }
        if self.timeout.is_zero() {
            return Err(ModelError::InvalidConfig("timeout must be positive".into()));
        }
        if self.cover_limit == Some(0) {
            return Err(ModelError::InvalidConfig("cover_limit must be at least 1".into()));
        }
        Ok(())
    }
}

/// One verdict of a verify call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyJudgment {
    pub id: String,
    #[serde(default)]
    pub description: String,
    pub target: bool,
    pub predicted: bool,
    #[serde(default)]
    pub rationale: String,
}

impl VerifyJudgment {
    pub fn matches(&self) -> bool {
        self.target == self.predicted
    }
}
