//! Propositional model finder over a document's formulas.
//!
//! Formulas are Tseitin-encoded to CNF. Search is plain DPLL with unit
//! propagation: declared variables are decided in sorted-name order, `false`
//! before `true`, so a session always yields the same model sequence.

use std::collections::HashMap;

use crate::error::ModelError;
use crate::model::{Assignment, Formula, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Lit {
    var: usize,
    positive: bool,
}

impl Lit {
    fn pos(var: usize) -> Lit {
        Lit { var, positive: true }
    }

    fn neg(self) -> Lit {
        Lit {
            var: self.var,
            positive: !self.positive,
        }
    }
}

type Clause = Vec<Lit>;

struct Encoder<'a> {
    index: &'a HashMap<String, usize>,
    next: usize,
    clauses: Vec<Clause>,
    truth: Option<usize>,
}

impl Encoder<'_> {
    fn fresh(&mut self) -> usize {
        self.next += 1;
        self.next - 1
    }

    fn constant(&mut self, value: bool) -> Lit {
        let t = match self.truth {
            Some(t) => t,
            None => {
                let t = self.fresh();
                self.clauses.push(vec![Lit::pos(t)]);
                self.truth = Some(t);
                t
            }
        };
        if value {
            Lit::pos(t)
        } else {
            Lit::pos(t).neg()
        }
    }

    fn var(&self, name: &str) -> Result<Lit, ModelError> {
        self.index
            .get(name)
            .map(|&v| Lit::pos(v))
            .ok_or_else(|| ModelError::UnknownVar(name.to_string()))
    }

    /// Literal equivalent to `f`.
    fn encode(&mut self, f: &Formula) -> Result<Lit, ModelError> {
        Ok(match f {
            Formula::Var(name) => self.var(name)?,
            Formula::Const(b) => self.constant(*b),
            Formula::Not(inner) => self.encode(inner)?.neg(),
            Formula::And(fs) | Formula::Or(fs) => {
                let is_and = matches!(f, Formula::And(_));
                let kids = fs.iter().map(|c| self.encode(c)).collect::<Result<Vec<_>, _>>()?;
                let out = Lit::pos(self.fresh());
                // and: out -> k_i, (all k_i) -> out ; or is the dual with every literal negated
                let s = if is_and { out } else { out.neg() };
                let mut wide = vec![s];
                for &k in &kids {
                    let k = if is_and { k } else { k.neg() };
                    self.clauses.push(vec![s.neg(), k]);
                    wide.push(k.neg());
                }
                self.clauses.push(wide);
                out
            }
            Formula::Iff(lhs, rhs) => {
                let a = self.var(lhs)?;
                let b = self.encode(rhs)?;
                self.equiv(a, b)
            }
        })
    }

    fn equiv(&mut self, a: Lit, b: Lit) -> Lit {
        let out = Lit::pos(self.fresh());
        self.clauses.push(vec![out.neg(), a.neg(), b]);
        self.clauses.push(vec![out.neg(), a, b.neg()]);
        self.clauses.push(vec![out, a, b]);
        self.clauses.push(vec![out, a.neg(), b.neg()]);
        out
    }

    /// Asserts `f` at top level without an auxiliary for the root.
    fn assert(&mut self, f: &Formula) -> Result<(), ModelError> {
        match f {
            Formula::Iff(lhs, rhs) => {
                let a = self.var(lhs)?;
                let b = self.encode(rhs)?;
                self.clauses.push(vec![a.neg(), b]);
                self.clauses.push(vec![a, b.neg()]);
            }
            Formula::And(fs) => {
                for c in fs {
                    self.assert(c)?;
                }
            }
            other => {
                let l = self.encode(other)?;
                self.clauses.push(vec![l]);
            }
        }
        Ok(())
    }
}

/// A propositional search session: formulas, frozen values and blocked combinations.
#[derive(Debug, Clone)]
pub struct SolverSession {
    decision_order: Vec<String>,
    index: HashMap<String, usize>,
    num_vars: usize,
    base: Vec<Clause>,
    frozen: Assignment,
    blocked: Vec<Assignment>,
    projection: Vec<String>,
}

impl SolverSession {
    /// `bool_vars` are the decision variables; every formula may only mention them.
    pub fn new<'a>(formulas: &[Formula], bool_vars: impl IntoIterator<Item = &'a str>) -> Result<Self, ModelError> {
        let mut decision_order: Vec<String> = bool_vars.into_iter().map(str::to_string).collect();
        decision_order.sort();
        decision_order.dedup();
        let index: HashMap<String, usize> = decision_order.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut enc = Encoder {
            index: &index,
            next: decision_order.len(),
            clauses: Vec::new(),
            truth: None,
        };
        for f in formulas {
            enc.assert(f)?;
        }
        let (num_vars, base) = (enc.next, enc.clauses);
        Ok(SolverSession {
            projection: decision_order.clone(),
            decision_order,
            index,
            num_vars,
            base,
            frozen: Assignment::new(),
            blocked: Vec::new(),
        })
    }

    /// Fixes boolean values every model must extend. String bindings are ignored.
    pub fn freeze(&mut self, values: &Assignment) -> Result<(), ModelError> {
        for (name, value) in values.booleans().iter() {
            if !self.index.contains_key(name) {
                return Err(ModelError::UnknownVar(name.clone()));
            }
            self.frozen.bind(name.clone(), value.clone())?;
        }
        Ok(())
    }

    /// Sets the variables `block_model` projects onto.
    pub fn set_projection<'a>(&mut self, vars: impl IntoIterator<Item = &'a str>) -> Result<(), ModelError> {
        let mut projection = Vec::new();
        for v in vars {
            if !self.index.contains_key(v) {
                return Err(ModelError::UnknownVar(v.to_string()));
            }
            projection.push(v.to_string());
        }
        projection.sort();
        projection.dedup();
        self.projection = projection;
        Ok(())
    }

    pub fn decision_order(&self) -> &[String] {
        &self.decision_order
    }

    pub fn frozen(&self) -> &Assignment {
        &self.frozen
    }

    pub fn projection(&self) -> &[String] {
        &self.projection
    }

    pub fn blocked(&self) -> &[Assignment] {
        &self.blocked
    }

    /// A total boolean model satisfying every formula, extending the frozen
    /// values and avoiding every blocked combination; `None` if none exists.
    pub fn propose_model(&self) -> Option<Assignment> {
        let mut clauses = self.base.clone();
        for (name, value) in self.frozen.iter() {
            let lit = Lit::pos(self.index[name]);
            clauses.push(vec![if value == &Value::Bool(true) { lit } else { lit.neg() }]);
        }
        for block in &self.blocked {
            clauses.push(
                block
                    .iter()
                    .map(|(name, value)| {
                        let lit = Lit::pos(self.index[name]);
                        if value == &Value::Bool(true) {
                            lit.neg()
                        } else {
                            lit
                        }
                    })
                    .collect(),
            );
        }
        let values = dpll(&clauses, self.num_vars)?;
        Some(
            self.decision_order
                .iter()
                .enumerate()
                .map(|(i, name)| (name.clone(), Value::Bool(values[i])))
                .collect(),
        )
    }

    /// Excludes every model agreeing with `model` on the session projection.
    pub fn block_model(&mut self, model: &Assignment) {
        let projected = model.project(self.projection.iter().map(String::as_str));
        self.blocked.push(projected);
    }

    /// Excludes every model agreeing with `partial` on all of its bindings.
    /// An empty `partial` excludes everything.
    pub fn block(&mut self, partial: &Assignment) -> Result<(), ModelError> {
        for (name, value) in partial.iter() {
            if !self.index.contains_key(name) || value.as_bool().is_none() {
                return Err(ModelError::UnknownVar(name.clone()));
            }
        }
        self.blocked.push(partial.clone());
        Ok(())
    }

    /// Repeated propose/block until exhaustion or `limit` models.
    pub fn enumerate_models(&mut self, limit: Option<usize>) -> Vec<Assignment> {
        let mut out = Vec::new();
        while limit.is_none_or(|l| out.len() < l) {
            let Some(model) = self.propose_model() else {
                break;
            };
            self.block_model(&model);
            out.push(model);
        }
        out
    }
}

fn propagate(clauses: &[Clause], values: &mut [Option<bool>]) -> bool {
    loop {
        let mut changed = false;
        for clause in clauses {
            let mut unassigned = None;
            let mut open = 0;
            let mut satisfied = false;
            for lit in clause {
                match values[lit.var] {
                    Some(v) if v == lit.positive => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open += 1;
                        unassigned = Some(*lit);
                    }
                }
            }
            if satisfied {
                continue;
            }
            match (open, unassigned) {
                (0, _) => return false,
                (1, Some(lit)) => {
                    values[lit.var] = Some(lit.positive);
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            return true;
        }
    }
}

fn dpll(clauses: &[Clause], num_vars: usize) -> Option<Vec<bool>> {
    fn search(clauses: &[Clause], values: &mut Vec<Option<bool>>) -> bool {
        if !propagate(clauses, values) {
            return false;
        }
        let Some(var) = values.iter().position(Option::is_none) else {
            return true;
        };
        for choice in [false, true] {
            let mut trial = values.clone();
            trial[var] = Some(choice);
            if search(clauses, &mut trial) {
                *values = trial;
                return true;
            }
        }
        false
    }
    let mut values = vec![None; num_vars];
    if search(clauses, &mut values) {
        Some(values.into_iter().map(|v| v.unwrap_or(false)).collect())
    } else {
        None
    }
}
