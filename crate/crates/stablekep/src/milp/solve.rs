//! Exact depth-first branch-and-bound over binary variables.
//!
//! Continuous variables must be pinned by an equality row over binaries (the
//! cycle-edge linking rows have this shape); they are substituted out in a
//! presolve pass, so the search itself runs on a pure 0-1 model with exact
//! rational row activities. Pruning uses the sum of positive remaining
//! objective coefficients plus, when the objective is covered by packing
//! rows, a capacity bound derived from those rows.

use std::time::{Duration, Instant};

use thiserror::Error;

use super::rational::{Rat, RatError, ONE, ZERO};
use super::{MilpModel, MilpSolution, ObjectiveSense, RowSense, SolveStatus, VarKind};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),
    #[error(transparent)]
    Numeric(#[from] RatError),
    #[error("internal solver error: {0}")]
    Internal(String),
}

#[derive(Clone)]
struct Row {
    terms: Vec<(usize, Rat)>,
    sense: RowSense,
    rhs: Rat,
    /// Activity bounds over the current partial assignment.
    minact: Rat,
    maxact: Rat,
}

/// A substituted continuous variable: `value = constant + sum(coeff * x_j)`.
struct Substitution {
    var: usize,
    constant: Rat,
    terms: Vec<(usize, Rat)>,
}

struct Searcher {
    obj: Vec<Rat>,
    branchable: Vec<bool>,
    value: Vec<i8>,
    rows: Vec<Row>,
    col_rows: Vec<Vec<(usize, Rat)>>,
    cover_rows: Vec<usize>,
    cover_enabled: bool,
    cur_obj: Rat,
    pos_remaining: Rat,
    best: Option<(Rat, Vec<i8>)>,
    trail: Vec<usize>,
    dirty: Vec<usize>,
    in_dirty: Vec<bool>,
    nodes: u64,
    deadline: Instant,
    timed_out: bool,
}

impl Searcher {
    fn fix(&mut self, var: usize, val: i8) -> Result<bool, SolveError> {
        match self.value[var] {
            -1 => {}
            v if v == val => return Ok(true),
            _ => return Ok(false),
        }
        self.value[var] = val;
        self.trail.push(var);
        let obj = self.obj[var];
        if val == 1 {
            self.cur_obj = self.cur_obj.add(obj)?;
        }
        if obj.is_positive() {
            self.pos_remaining = self.pos_remaining.sub(obj)?;
        }
        for k in 0..self.col_rows[var].len() {
            let (r, c) = self.col_rows[var][k];
            let contrib = if val == 1 { c } else { ZERO };
            let row = &mut self.rows[r];
            row.minact = row.minact.add(contrib.sub(c.min(ZERO))?)?;
            row.maxact = row.maxact.add(contrib.sub(c.max(ZERO))?)?;
            if !self.in_dirty[r] {
                self.in_dirty[r] = true;
                self.dirty.push(r);
            }
        }
        Ok(true)
    }

    fn unfix(&mut self, var: usize) -> Result<(), SolveError> {
        let val = self.value[var];
        debug_assert!(val >= 0);
        self.value[var] = -1;
        let obj = self.obj[var];
        if val == 1 {
            self.cur_obj = self.cur_obj.sub(obj)?;
        }
        if obj.is_positive() {
            self.pos_remaining = self.pos_remaining.add(obj)?;
        }
        for k in 0..self.col_rows[var].len() {
            let (r, c) = self.col_rows[var][k];
            let contrib = if val == 1 { c } else { ZERO };
            let row = &mut self.rows[r];
            row.minact = row.minact.sub(contrib.sub(c.min(ZERO))?)?;
            row.maxact = row.maxact.sub(contrib.sub(c.max(ZERO))?)?;
        }
        Ok(())
    }

    fn undo_to(&mut self, mark: usize) -> Result<(), SolveError> {
        while self.trail.len() > mark {
            let var = self.trail.pop().unwrap();
            self.unfix(var)?;
        }
        self.dirty.clear();
        for d in self.in_dirty.iter_mut() {
            *d = false;
        }
        Ok(())
    }

    /// Unit propagation on row activity bounds until fixpoint. Returns false
    /// on conflict.
    fn propagate(&mut self) -> Result<bool, SolveError> {
        while let Some(r) = self.dirty.pop() {
            self.in_dirty[r] = false;
            let (sense, rhs) = (self.rows[r].sense, self.rows[r].rhs);
            let feasible = match sense {
                RowSense::Le => self.rows[r].minact <= rhs,
                RowSense::Ge => self.rows[r].maxact >= rhs,
                RowSense::Eq => self.rows[r].minact <= rhs && self.rows[r].maxact >= rhs,
            };
            if !feasible {
                return Ok(false);
            }
            // Skip rows that can no longer force anything.
            let le_active = matches!(sense, RowSense::Le | RowSense::Eq)
                && self.rows[r].maxact > rhs;
            let ge_active = matches!(sense, RowSense::Ge | RowSense::Eq)
                && self.rows[r].minact < rhs;
            if !le_active && !ge_active {
                continue;
            }
            let nterms = self.rows[r].terms.len();
            for k in 0..nterms {
                let (j, c) = self.rows[r].terms[k];
                if self.value[j] != -1 {
                    continue;
                }
                let minact = self.rows[r].minact;
                let maxact = self.rows[r].maxact;
                let mut force: Option<i8> = None;
                if matches!(sense, RowSense::Le | RowSense::Eq) {
                    // Value 1 raises minact by max(c,0); value 0 by max(-c,0).
                    if c.is_positive() && minact.add(c)? > rhs {
                        force = Some(0);
                    } else if c.is_negative() && minact.sub(c)? > rhs {
                        force = Some(1);
                    }
                }
                if force.is_none() && matches!(sense, RowSense::Ge | RowSense::Eq) {
                    // Value 1 lowers maxact by max(-c,0); value 0 by max(c,0).
                    if c.is_negative() && maxact.add(c)? < rhs {
                        force = Some(0);
                    } else if c.is_positive() && maxact.sub(c)? < rhs {
                        force = Some(1);
                    }
                }
                if let Some(v) = force {
                    if !self.fix(j, v)? {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Capacity left in the covering packing rows; a valid upper bound on the
    /// objective still collectable from unfixed variables.
    fn cover_cap(&self) -> Result<Rat, SolveError> {
        let mut cap = ZERO;
        for &r in &self.cover_rows {
            let row = &self.rows[r];
            // All-nonnegative rows have minact equal to the fixed-one activity.
            let slack = row.rhs.sub(row.minact)?;
            if slack.is_positive() {
                cap = cap.add(slack)?;
            }
        }
        Ok(cap)
    }

    fn dfs(&mut self, hint: usize) -> Result<(), SolveError> {
        self.nodes += 1;
        if self.nodes % 4096 == 0 && Instant::now() >= self.deadline {
            self.timed_out = true;
            return Ok(());
        }
        let mut bound = self.cur_obj.add(self.pos_remaining)?;
        if self.cover_enabled {
            let alt = self.cur_obj.add(self.cover_cap()?)?;
            if alt < bound {
                bound = alt;
            }
        }
        if let Some((best, _)) = &self.best {
            if bound <= *best {
                return Ok(());
            }
        }
        let mut j = hint;
        while j < self.value.len() && (!self.branchable[j] || self.value[j] != -1) {
            j += 1;
        }
        if j == self.value.len() {
            let better = match &self.best {
                None => true,
                Some((best, _)) => self.cur_obj > *best,
            };
            if better {
                self.best = Some((self.cur_obj, self.value.clone()));
            }
            return Ok(());
        }
        let order: [i8; 2] = if self.obj[j].is_positive() { [1, 0] } else { [0, 1] };
        for val in order {
            let mark = self.trail.len();
            let ok = self.fix(j, val)? && self.propagate()?;
            if ok {
                self.dfs(j + 1)?;
            }
            self.undo_to(mark)?;
            if self.timed_out {
                return Ok(());
            }
        }
        Ok(())
    }
}

/// Presolved pure-binary form of a model.
struct Presolved {
    obj: Vec<Rat>,
    rows: Vec<(Vec<(usize, Rat)>, RowSense, Rat)>,
    substitutions: Vec<Substitution>,
}

fn presolve(model: &MilpModel) -> Result<Presolved, SolveError> {
    let nvars = model.variables().len();
    let mut obj: Vec<Rat> = model.variables().iter().map(|v| v.objective).collect();
    let mut rows: Vec<Option<(Vec<(usize, Rat)>, RowSense, Rat)>> = model
        .constraints()
        .iter()
        .map(|c| Some((c.terms.clone(), c.sense, c.rhs)))
        .collect();
    let is_binary: Vec<bool> = model
        .variables()
        .iter()
        .map(|v| v.kind == VarKind::Binary)
        .collect();
    let mut eliminated = vec![false; nvars];
    let mut substitutions: Vec<Substitution> = Vec::new();

    loop {
        let mut progress = false;
        for v in 0..nvars {
            if is_binary[v] || eliminated[v] {
                continue;
            }
            // A defining row: an equality containing v where every other
            // variable is binary.
            let def = rows.iter().position(|r| match r {
                Some((terms, RowSense::Eq, _)) => {
                    terms.iter().any(|&(j, _)| j == v)
                        && terms.iter().all(|&(j, _)| j == v || is_binary[j])
                }
                _ => None::<()>.is_some(),
            });
            let Some(def_idx) = def else { continue };
            let (terms, _, rhs) = rows[def_idx].take().unwrap();
            let a_v = terms.iter().find(|&&(j, _)| j == v).unwrap().1;
            let constant = rhs.div(a_v)?;
            let mut expr: Vec<(usize, Rat)> = Vec::new();
            for &(j, a) in &terms {
                if j != v {
                    expr.push((j, a.div(a_v)?.neg()));
                }
            }
            // Substitute into every remaining row.
            for slot in rows.iter_mut() {
                let Some((rterms, _, rrhs)) = slot else { continue };
                let Some(pos) = rterms.iter().position(|&(j, _)| j == v) else {
                    continue;
                };
                let c_v = rterms.remove(pos).1;
                *rrhs = rrhs.sub(c_v.mul(constant)?)?;
                for &(j, e) in &expr {
                    let add = c_v.mul(e)?;
                    match rterms.iter_mut().find(|(t, _)| *t == j) {
                        Some((_, coeff)) => *coeff = coeff.add(add)?,
                        None => rterms.push((j, add)),
                    }
                }
                rterms.retain(|&(_, c)| !c.is_zero());
            }
            // Substitute into the objective. The constant term is dropped:
            // it shifts every assignment equally and the final objective is
            // recomputed from the original model.
            if !obj[v].is_zero() {
                for &(j, e) in &expr {
                    obj[j] = obj[j].add(obj[v].mul(e)?)?;
                }
                obj[v] = ZERO;
            }
            // Nonnegativity of the eliminated variable becomes a row:
            // constant + sum(expr) >= 0.
            let neg_terms: Vec<(usize, Rat)> = expr.iter().map(|&(j, e)| (j, e)).collect();
            rows.push(Some((neg_terms, RowSense::Ge, constant.neg())));
            eliminated[v] = true;
            substitutions.push(Substitution {
                var: v,
                constant,
                terms: expr,
            });
            progress = true;
        }
        if !progress {
            break;
        }
    }

    if let Some(v) = (0..nvars).find(|&v| !is_binary[v] && !eliminated[v]) {
        return Err(SolveError::UnsupportedStructure(format!(
            "continuous variable '{}' is not defined by an equality over binaries",
            model.variables()[v].name
        )));
    }

    Ok(Presolved {
        obj,
        rows: rows.into_iter().flatten().collect(),
        substitutions,
    })
}

/// Chooses a deterministic subset of packing rows (<= rows, nonnegative
/// coefficients) whose column sums dominate every positive objective
/// coefficient. Returns `None` when the objective is not covered.
fn choose_cover(
    nvars: usize,
    obj: &[Rat],
    rows: &[(Vec<(usize, Rat)>, RowSense, Rat)],
) -> Option<Vec<usize>> {
    let packing: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, (terms, sense, rhs))| {
            *sense == RowSense::Le
                && !rhs.is_negative()
                && terms.iter().all(|(_, c)| !c.is_negative())
        })
        .map(|(i, _)| i)
        .collect();
    let mut coverage: Vec<Rat> = vec![ZERO; nvars];
    for &r in &packing {
        for &(j, c) in &rows[r].0 {
            coverage[j] = coverage[j].add(c).ok()?;
        }
    }
    for j in 0..nvars {
        if obj[j].is_positive() && coverage[j] < obj[j] {
            return None;
        }
    }
    // Greedily drop rows that are not needed for coverage.
    let mut kept: Vec<bool> = vec![true; packing.len()];
    for (pos, &r) in packing.iter().enumerate() {
        let removable = rows[r].0.iter().all(|&(j, c)| {
            !obj[j].is_positive() || coverage[j].sub(c).map(|v| v >= obj[j]).unwrap_or(false)
        });
        if removable {
            kept[pos] = false;
            for &(j, c) in &rows[r].0 {
                coverage[j] = coverage[j].sub(c).ok()?;
            }
        }
    }
    Some(
        packing
            .into_iter()
            .zip(kept)
            .filter(|&(_, k)| k)
            .map(|(r, _)| r)
            .collect(),
    )
}

/// Exact optimum by depth-first branch-and-bound on the binary variables.
/// `TimedOut` carries the incumbent when one was found.
pub fn solve_exact(model: &MilpModel, time_budget: Duration) -> Result<MilpSolution, SolveError> {
    let pre = presolve(model)?;
    let maximize = model.sense == ObjectiveSense::Maximize;
    let nvars = model.variables().len();
    let obj: Vec<Rat> = if maximize {
        pre.obj.clone()
    } else {
        pre.obj.iter().map(|c| c.neg()).collect()
    };

    let mut rows: Vec<Row> = Vec::with_capacity(pre.rows.len());
    let mut col_rows: Vec<Vec<(usize, Rat)>> = vec![Vec::new(); nvars];
    for (terms, sense, rhs) in &pre.rows {
        let idx = rows.len();
        let mut minact = ZERO;
        let mut maxact = ZERO;
        for &(j, c) in terms {
            col_rows[j].push((idx, c));
            minact = minact.add(c.min(ZERO))?;
            maxact = maxact.add(c.max(ZERO))?;
        }
        rows.push(Row {
            terms: terms.clone(),
            sense: *sense,
            rhs: *rhs,
            minact,
            maxact,
        });
    }

    let cover = choose_cover(nvars, &obj, &pre.rows);
    let branchable: Vec<bool> = model
        .variables()
        .iter()
        .map(|v| v.kind == VarKind::Binary)
        .collect();
    let pos_remaining = Rat::sum(obj.iter().copied().filter(|c| c.is_positive()))?;

    let mut searcher = Searcher {
        obj,
        branchable,
        value: vec![-1; nvars],
        rows,
        col_rows,
        cover_enabled: cover.is_some(),
        cover_rows: cover.unwrap_or_default(),
        cur_obj: ZERO,
        pos_remaining,
        best: None,
        trail: Vec::new(),
        dirty: Vec::new(),
        in_dirty: vec![false; pre.rows.len()],
        nodes: 0,
        deadline: Instant::now() + time_budget,
        timed_out: false,
    };
    // Substituted variables are not branched; pin them at 0 so the leaf test
    // sees them as decided (their real values come from their expressions).
    for s in &pre.substitutions {
        searcher.value[s.var] = 0;
    }

    for r in 0..searcher.rows.len() {
        searcher.dirty.push(r);
        searcher.in_dirty[r] = true;
    }
    let root_feasible = searcher.propagate()?;
    if root_feasible {
        searcher.dfs(0)?;
    }

    let (status, best) = match (searcher.timed_out, searcher.best.take()) {
        (false, Some(best)) => (SolveStatus::Optimal, Some(best)),
        (false, None) => (SolveStatus::Infeasible, None),
        (true, best) => (SolveStatus::TimedOut, best),
    };
    let Some((_, values)) = best else {
        return Ok(MilpSolution {
            status,
            objective: ZERO,
            assignment: None,
        });
    };

    let mut assignment: Vec<Rat> = values
        .iter()
        .map(|&v| if v == 1 { ONE } else { ZERO })
        .collect();
    for s in &pre.substitutions {
        let mut val = s.constant;
        for &(j, e) in &s.terms {
            val = val.add(e.mul(assignment[j])?)?;
        }
        assignment[s.var] = val;
    }
    let objective = model
        .objective_value(&assignment)
        .map_err(SolveError::Numeric)?;
    if status == SolveStatus::Optimal {
        model
            .check_assignment(&assignment)
            .map_err(SolveError::Internal)?;
    }
    Ok(MilpSolution {
        status,
        objective,
        assignment: Some(assignment),
    })
}
