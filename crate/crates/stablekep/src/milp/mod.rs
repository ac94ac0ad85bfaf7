//! Solver-agnostic MILP intermediate representation with exact rational
//! data, a deterministic CPLEX-LP writer/reader, a solution-file format and
//! an exact depth-first branch-and-bound solver for desk-scale models.

pub mod lp;
pub mod rational;
pub mod solve;

use std::collections::HashMap;

use thiserror::Error;

pub use lp::{parse_lp, read_solution, write_lp, write_lp_string, write_solution};
pub use rational::{Rat, RatError};
pub use solve::{solve_exact, SolveError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    ContinuousNonNegative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveSense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub objective: Rat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sparse row: `(variable index, coefficient)`, ascending by index with
    /// no zero coefficients and no repeated indices.
    pub terms: Vec<(usize, Rat)>,
    pub sense: RowSense,
    pub rhs: Rat,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate variable name '{0}'")]
    DuplicateVariable(String),
    #[error("constraint '{0}' references unknown variable index {1}")]
    BadVariableIndex(String, usize),
    #[error("duplicate constraint name '{0}'")]
    DuplicateConstraint(String),
    #[error("name '{0}' is not legal in LP files")]
    IllegalName(String),
    #[error(transparent)]
    Rat(#[from] RatError),
}

/// A linear 0-1 / continuous model. Variables keep insertion order, which is
/// also the branch order of the exact solver and the LP emission order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MilpModel {
    pub sense: ObjectiveSense,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    var_index: HashMap<String, usize>,
}

impl Default for ObjectiveSense {
    fn default() -> Self {
        ObjectiveSense::Maximize
    }
}

impl MilpModel {
    pub fn new(sense: ObjectiveSense) -> MilpModel {
        MilpModel {
            sense,
            variables: Vec::new(),
            constraints: Vec::new(),
            var_index: HashMap::new(),
        }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        objective: Rat,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if !lp::legal_name(&name) {
            return Err(ModelError::IllegalName(name));
        }
        if self.var_index.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        let idx = self.variables.len();
        self.var_index.insert(name.clone(), idx);
        self.variables.push(Variable {
            name,
            kind,
            objective,
        });
        Ok(idx)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, objective: Rat) -> Result<usize, ModelError> {
        self.add_variable(name, VarKind::Binary, objective)
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        objective: Rat,
    ) -> Result<usize, ModelError> {
        self.add_variable(name, VarKind::ContinuousNonNegative, objective)
    }

    /// Adds a row. Terms are merged by variable index and zero coefficients
    /// dropped, so builders can accumulate naively.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, Rat)>,
        sense: RowSense,
        rhs: Rat,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        if !lp::legal_name(&name) {
            return Err(ModelError::IllegalName(name));
        }
        if self.constraints.iter().any(|c| c.name == name) {
            return Err(ModelError::DuplicateConstraint(name));
        }
        let mut merged: Vec<(usize, Rat)> = Vec::with_capacity(terms.len());
        let mut sorted = terms;
        sorted.sort_by_key(|&(i, _)| i);
        for (i, coeff) in sorted {
            if i >= self.variables.len() {
                return Err(ModelError::BadVariableIndex(name, i));
            }
            match merged.last_mut() {
                Some((last, acc)) if *last == i => *acc = acc.add(coeff)?,
                _ => merged.push((i, coeff)),
            }
        }
        merged.retain(|&(_, c)| !c.is_zero());
        let idx = self.constraints.len();
        self.constraints.push(Constraint {
            name,
            terms: merged,
            sense,
            rhs,
        });
        Ok(idx)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn set_objective_coeff(&mut self, idx: usize, coeff: Rat) {
        self.variables[idx].objective = coeff;
    }

    /// Adds (or merges) one term into an existing row.
    pub fn add_term_to_constraint(
        &mut self,
        row: usize,
        var: usize,
        coeff: Rat,
    ) -> Result<(), ModelError> {
        if var >= self.variables.len() {
            return Err(ModelError::BadVariableIndex(
                self.constraints[row].name.clone(),
                var,
            ));
        }
        let terms = &mut self.constraints[row].terms;
        match terms.iter_mut().find(|(i, _)| *i == var) {
            Some((_, c)) => *c = c.add(coeff)?,
            None => {
                terms.push((var, coeff));
                terms.sort_by_key(|&(i, _)| i);
            }
        }
        terms.retain(|&(_, c)| !c.is_zero());
        Ok(())
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn var_by_name(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    /// Objective value of a full assignment.
    pub fn objective_value(&self, assignment: &[Rat]) -> Result<Rat, RatError> {
        let mut acc = rational::ZERO;
        for (v, x) in self.variables.iter().zip(assignment) {
            acc = acc.add(v.objective.mul(*x)?)?;
        }
        Ok(acc)
    }

    /// Exact feasibility check of a full assignment (binaries must be 0/1).
    pub fn check_assignment(&self, assignment: &[Rat]) -> Result<(), String> {
        if assignment.len() != self.variables.len() {
            return Err(format!(
                "assignment has {} values for {} variables",
                assignment.len(),
                self.variables.len()
            ));
        }
        for (v, &x) in self.variables.iter().zip(assignment) {
            match v.kind {
                VarKind::Binary => {
                    if !(x == rational::ZERO || x == rational::ONE) {
                        return Err(format!("binary {} has value {}", v.name, x));
                    }
                }
                VarKind::ContinuousNonNegative => {
                    if x.is_negative() {
                        return Err(format!("continuous {} is negative: {}", v.name, x));
                    }
                }
            }
        }
        for c in &self.constraints {
            let lhs = self.row_activity(c, assignment).map_err(|e| e.to_string())?;
            let ok = match c.sense {
                RowSense::Le => lhs <= c.rhs,
                RowSense::Ge => lhs >= c.rhs,
                RowSense::Eq => lhs == c.rhs,
            };
            if !ok {
                return Err(format!(
                    "constraint {} violated: lhs {} {} rhs {}",
                    c.name,
                    lhs,
                    match c.sense {
                        RowSense::Le => "<=",
                        RowSense::Ge => ">=",
                        RowSense::Eq => "=",
                    },
                    c.rhs
                ));
            }
        }
        Ok(())
    }

    pub fn row_activity(&self, c: &Constraint, assignment: &[Rat]) -> Result<Rat, RatError> {
        let mut acc = rational::ZERO;
        for &(i, coeff) in &c.terms {
            acc = acc.add(coeff.mul(assignment[i])?)?;
        }
        Ok(acc)
    }

    /// LP-relaxation export: every binary becomes continuous in [0, 1]; the
    /// upper bound is carried by an explicit `relax_ub_*` row. Used only for
    /// the external-solver path.
    pub fn relax_binaries(&self) -> MilpModel {
        let mut relaxed = self.clone();
        let mut ub_rows = Vec::new();
        for (i, v) in relaxed.variables.iter_mut().enumerate() {
            if v.kind == VarKind::Binary {
                v.kind = VarKind::ContinuousNonNegative;
                ub_rows.push((format!("relax_ub_{}", v.name), i));
            }
        }
        for (name, i) in ub_rows {
            relaxed
                .add_constraint(name, vec![(i, rational::ONE)], RowSense::Le, rational::ONE)
                .expect("relaxation bound row");
        }
        relaxed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimedOut,
}

/// Result of a solve or a parsed external solution file. `assignment` is in
/// model variable order; `TimedOut` carries the incumbent when one exists.
#[derive(Clone, Debug, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    pub objective: Rat,
    pub assignment: Option<Vec<Rat>>,
}

impl MilpSolution {
    pub fn value_by_name(&self, model: &MilpModel, name: &str) -> Option<Rat> {
        let idx = model.var_by_name(name)?;
        self.assignment.as_ref().map(|a| a[idx])
    }
}
