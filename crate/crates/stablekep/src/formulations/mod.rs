//! Model builders for the edge (EF), cycle (CF) and cycle-edge (CEF)
//! formulations in each stability mode, the relaxed blocking-cycle model
//! with a transplant budget, and solution decoding back to exchanges.
//!
//! Naming is stable and parseable for external-solver round-trips:
//! variables `x_c<k>`, `y_<i>_<j>`, `yc_<i>_<j>`, `yn_<i>_<j>`, `tau_c<k>`;
//! constraints `pack_v<i>`, `stab_c<k>`, `path_p<k>`, `link_<i>_<j>`,
//! `budget`.

mod ef;
mod relaxed;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::enumerate::Cycle;
use crate::instance::{Instance, PreferenceMode, VertexId};
use crate::milp::rational::{Rat, ONE, ZERO};
use crate::milp::{MilpModel, MilpSolution, ModelError, ObjectiveSense, RowSense, SolveStatus};
use crate::prefs::CyclePrefSets;
use crate::stability::{Exchange, StabilityError};

pub use relaxed::build_relaxed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabilityMode {
    Stable,
    StronglyStableStrict,
    StronglyStableWeak,
}

impl StabilityMode {
    /// The strong-stability mode matching an instance's preference mode.
    pub fn strong_for(inst: &Instance) -> StabilityMode {
        match inst.mode() {
            PreferenceMode::Strict => StabilityMode::StronglyStableStrict,
            PreferenceMode::Weak => StabilityMode::StronglyStableWeak,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CefObjective {
    /// Cycle weights on the x variables.
    XObjective,
    /// Unit weights on the non-dummy y variables.
    YObjective,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormulationKind {
    Ef,
    Cf,
    Cef,
}

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("mode {0:?} requires {1:?} preferences but the instance uses {2:?}")]
    ModeMismatch(StabilityMode, PreferenceMode, PreferenceMode),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("kappa must lie in [0, 1], got {0}")]
    BadKappa(Rat),
    #[error("numeric error: {0}")]
    Numeric(#[from] crate::milp::RatError),
}

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("solution is not optimal")]
    NotOptimal,
    #[error("solution carries no assignment")]
    NoAssignment,
    #[error("decoded exchange infeasible: {0}")]
    Infeasible(#[from] StabilityError),
    #[error("edge-formulation support does not decompose into legal cycles: {0}")]
    BadSupport(String),
    #[error("transplant count {0} does not match objective expression value {1}")]
    TransplantMismatch(u32, Rat),
    #[error("numeric error: {0}")]
    Numeric(#[from] crate::milp::RatError),
}

/// A built model plus the variable and row maps needed to decode solutions
/// and to attach the relaxed-model machinery.
#[derive(Clone, Debug)]
pub struct BuildArtifacts {
    pub model: MilpModel,
    pub kind: FormulationKind,
    /// Cycle index -> x variable (CF/CEF; empty for EF).
    pub cycle_vars: Vec<usize>,
    /// Arc -> y variable (EF/CEF; empty for CF).
    pub y_vars: BTreeMap<(VertexId, VertexId), usize>,
    /// Arc -> y^c variable (EF only; pair-pair arcs).
    pub yc_vars: BTreeMap<(VertexId, VertexId), usize>,
    /// Arc -> y^n variable (EF only).
    pub yn_vars: BTreeMap<(VertexId, VertexId), usize>,
    /// Cycle index -> stability row.
    pub stab_rows: Vec<usize>,
    /// Cycle index -> tau variable (relaxed models only).
    pub tau_vars: Vec<usize>,
    /// The transplant-count expression (objective of the base formulation).
    pub transplant_terms: Vec<(usize, Rat)>,
}

impl BuildArtifacts {
    /// Indices of cycles whose relaxed slack variable is set.
    pub fn blocking_from_tau(&self, solution: &MilpSolution) -> Vec<usize> {
        let Some(assignment) = &solution.assignment else {
            return Vec::new();
        };
        self.tau_vars
            .iter()
            .enumerate()
            .filter(|&(_, &v)| assignment[v] == ONE)
            .map(|(c, _)| c)
            .collect()
    }

    /// Exact transplant count of an assignment under the base objective.
    pub fn transplant_value(&self, assignment: &[Rat]) -> Result<Rat, crate::milp::RatError> {
        let mut acc = ZERO;
        for &(v, c) in &self.transplant_terms {
            acc = acc.add(c.mul(assignment[v])?)?;
        }
        Ok(acc)
    }
}

pub(crate) fn check_mode(inst: &Instance, mode: StabilityMode) -> Result<(), FormulationError> {
    let required = match mode {
        StabilityMode::Stable => return Ok(()),
        StabilityMode::StronglyStableStrict => PreferenceMode::Strict,
        StabilityMode::StronglyStableWeak => PreferenceMode::Weak,
    };
    if inst.mode() != required {
        return Err(FormulationError::ModeMismatch(mode, required, inst.mode()));
    }
    Ok(())
}

/// Appends one stability row per cycle over arc-selection variables
/// (shared by EF and CEF). For each arc `(i, j)` of the cycle the row sees
/// the selected in-arcs of `j` that are ranked at least as well (Stable),
/// strictly better (strong modes), or exactly equal (weak-tie escape).
pub(crate) fn y_stability_rows(
    model: &mut MilpModel,
    inst: &Instance,
    cycles: &[Cycle],
    mode: StabilityMode,
    y_var: &BTreeMap<(VertexId, VertexId), usize>,
) -> Result<Vec<usize>, FormulationError> {
    let mut rows = Vec::with_capacity(cycles.len());
    for (k, c) in cycles.iter().enumerate() {
        let len = Rat::int(c.len() as i64);
        let mut terms: BTreeMap<usize, Rat> = BTreeMap::new();
        let mut bump = |var: usize, coeff: Rat| {
            let e = terms.entry(var).or_insert(ZERO);
            *e = e.add(coeff).expect("small coefficients");
        };
        match mode {
            StabilityMode::Stable => {
                for (i, j) in c.arcs() {
                    let r_ij = inst.rank(i, j).expect("cycle arc");
                    for &(src, rank) in inst.in_neighbors(j).expect("vertex") {
                        if rank <= r_ij {
                            bump(y_var[&(src, j)], ONE);
                        }
                    }
                }
            }
            StabilityMode::StronglyStableStrict => {
                for (i, j) in c.arcs() {
                    let r_ij = inst.rank(i, j).expect("cycle arc");
                    bump(y_var[&(i, j)], ONE);
                    for &(src, rank) in inst.in_neighbors(j).expect("vertex") {
                        if rank < r_ij {
                            bump(y_var[&(src, j)], len);
                        }
                    }
                }
            }
            StabilityMode::StronglyStableWeak => {
                for (i, j) in c.arcs() {
                    let r_ij = inst.rank(i, j).expect("cycle arc");
                    bump(y_var[&(i, j)], ONE);
                    for &(src, rank) in inst.in_neighbors(j).expect("vertex") {
                        if rank == r_ij && src != i {
                            bump(y_var[&(src, j)], ONE);
                        } else if rank < r_ij {
                            bump(y_var[&(src, j)], len);
                        }
                    }
                }
            }
        }
        let rhs = match mode {
            StabilityMode::Stable => ONE,
            _ => len,
        };
        let row = model.add_constraint(
            format!("stab_c{k}"),
            terms.into_iter().collect(),
            RowSense::Ge,
            rhs,
        )?;
        rows.push(row);
    }
    Ok(rows)
}

/// Cycle formulation: one binary per cycle, per-vertex packing rows, one
/// stability row per cycle built from the B/S/E preference sets.
pub fn build_cf(
    inst: &Instance,
    cycles: &[Cycle],
    pref_sets: &CyclePrefSets,
    mode: StabilityMode,
) -> Result<BuildArtifacts, FormulationError> {
    check_mode(inst, mode)?;
    let mut model = MilpModel::new(ObjectiveSense::Maximize);
    let mut cycle_vars = Vec::with_capacity(cycles.len());
    let mut transplant_terms = Vec::with_capacity(cycles.len());
    for (k, c) in cycles.iter().enumerate() {
        let v = model.add_binary(format!("x_c{k}"), Rat::from(c.weight))?;
        cycle_vars.push(v);
        transplant_terms.push((v, Rat::from(c.weight)));
    }
    for v in inst.vertices() {
        let through: Vec<usize> = cycles
            .iter()
            .enumerate()
            .filter(|(_, c)| c.contains(v))
            .map(|(k, _)| k)
            .collect();
        if through.is_empty() {
            continue;
        }
        model.add_constraint(
            format!("pack_v{v}"),
            through.iter().map(|&k| (cycle_vars[k], ONE)).collect(),
            RowSense::Le,
            ONE,
        )?;
    }

    let mut stab_rows = Vec::with_capacity(cycles.len());
    for (k, c) in cycles.iter().enumerate() {
        let len = Rat::int(c.len() as i64);
        let mut terms: BTreeMap<usize, Rat> = BTreeMap::new();
        let mut bump = |var: usize, coeff: Rat| {
            let e = terms.entry(var).or_insert(ZERO);
            *e = e.add(coeff).expect("small coefficients");
        };
        let union_of = |select: &dyn Fn(VertexId) -> Vec<usize>| {
            let mut u: Vec<usize> = c.vertices.iter().flat_map(|&v| select(v)).collect();
            u.sort_unstable();
            u.dedup();
            u
        };
        let rhs = match mode {
            StabilityMode::Stable => {
                bump(cycle_vars[k], ONE);
                for s in union_of(&|v| pref_sets.better(v, k).to_vec()) {
                    bump(cycle_vars[s], ONE);
                }
                ONE
            }
            StabilityMode::StronglyStableStrict => {
                bump(cycle_vars[k], ONE);
                for s in union_of(&|v| pref_sets.strictly_better(v, k).to_vec()) {
                    bump(cycle_vars[s], ONE);
                }
                ONE
            }
            StabilityMode::StronglyStableWeak => {
                let some_vertex_unswappable = c
                    .vertices
                    .iter()
                    .any(|&v| pref_sets.equal(v, k).is_empty());
                if some_vertex_unswappable {
                    // Tightened row: the all-equal escape is impossible.
                    bump(cycle_vars[k], ONE);
                    for s in union_of(&|v| pref_sets.strictly_better(v, k).to_vec()) {
                        bump(cycle_vars[s], ONE);
                    }
                    ONE
                } else {
                    // Scaled by |c| to keep coefficients integral: the
                    // equal-set incidences sum to |c| exactly when every
                    // vertex is matched at equal rank.
                    bump(cycle_vars[k], len);
                    for &v in &c.vertices {
                        for &s in pref_sets.equal(v, k) {
                            bump(cycle_vars[s], ONE);
                        }
                    }
                    for s in union_of(&|v| pref_sets.strictly_better(v, k).to_vec()) {
                        bump(cycle_vars[s], len);
                    }
                    len
                }
            }
        };
        let row = model.add_constraint(
            format!("stab_c{k}"),
            terms.into_iter().collect(),
            RowSense::Ge,
            rhs,
        )?;
        stab_rows.push(row);
    }

    Ok(BuildArtifacts {
        model,
        kind: FormulationKind::Cf,
        cycle_vars,
        y_vars: BTreeMap::new(),
        yc_vars: BTreeMap::new(),
        yn_vars: BTreeMap::new(),
        stab_rows,
        tau_vars: Vec::new(),
        transplant_terms,
    })
}

/// Cycle-edge formulation: binary x per cycle, continuous y per arc linked by
/// an equality, packing rows on x, stability rows on y.
pub fn build_cef(
    inst: &Instance,
    cycles: &[Cycle],
    mode: StabilityMode,
    objective: CefObjective,
) -> Result<BuildArtifacts, FormulationError> {
    check_mode(inst, mode)?;
    let mut model = MilpModel::new(ObjectiveSense::Maximize);
    let mut cycle_vars = Vec::with_capacity(cycles.len());
    for (k, c) in cycles.iter().enumerate() {
        let obj = match objective {
            CefObjective::XObjective => Rat::from(c.weight),
            CefObjective::YObjective => ZERO,
        };
        cycle_vars.push(model.add_binary(format!("x_c{k}"), obj)?);
    }
    let mut y_vars = BTreeMap::new();
    for a in inst.arcs() {
        let obj = match objective {
            CefObjective::YObjective if !a.dummy => ONE,
            _ => ZERO,
        };
        let v = model.add_continuous(format!("y_{}_{}", a.from, a.to), obj)?;
        y_vars.insert((a.from, a.to), v);
    }

    for v in inst.vertices() {
        let through: Vec<usize> = cycles
            .iter()
            .enumerate()
            .filter(|(_, c)| c.contains(v))
            .map(|(k, _)| k)
            .collect();
        if through.is_empty() {
            continue;
        }
        model.add_constraint(
            format!("pack_v{v}"),
            through.iter().map(|&k| (cycle_vars[k], ONE)).collect(),
            RowSense::Le,
            ONE,
        )?;
    }
    for a in inst.arcs() {
        let mut terms: Vec<(usize, Rat)> = cycles
            .iter()
            .enumerate()
            .filter(|(_, c)| c.arcs().any(|arc| arc == (a.from, a.to)))
            .map(|(k, _)| (cycle_vars[k], ONE))
            .collect();
        terms.push((y_vars[&(a.from, a.to)], ONE.neg()));
        model.add_constraint(
            format!("link_{}_{}", a.from, a.to),
            terms,
            RowSense::Eq,
            ZERO,
        )?;
    }
    let stab_rows = y_stability_rows(&mut model, inst, cycles, mode, &y_vars)?;

    let transplant_terms = match objective {
        CefObjective::XObjective => cycles
            .iter()
            .enumerate()
            .map(|(k, c)| (cycle_vars[k], Rat::from(c.weight)))
            .collect(),
        CefObjective::YObjective => inst
            .arcs()
            .iter()
            .filter(|a| !a.dummy)
            .map(|a| (y_vars[&(a.from, a.to)], ONE))
            .collect(),
    };

    Ok(BuildArtifacts {
        model,
        kind: FormulationKind::Cef,
        cycle_vars,
        y_vars,
        yc_vars: BTreeMap::new(),
        yn_vars: BTreeMap::new(),
        stab_rows,
        tau_vars: Vec::new(),
        transplant_terms,
    })
}

pub use ef::build_ef;

/// Decodes an optimal solution into an exchange and re-validates it: the
/// selected cycles must be vertex-disjoint and the transplant count must
/// equal the value of the base objective expression.
pub fn decode(
    inst: &Instance,
    cycles: &[Cycle],
    artifacts: &BuildArtifacts,
    solution: &MilpSolution,
) -> Result<Exchange, DecodeError> {
    if solution.status == SolveStatus::Infeasible {
        return Err(DecodeError::NotOptimal);
    }
    let assignment = solution
        .assignment
        .as_ref()
        .ok_or(DecodeError::NoAssignment)?;

    let indices: Vec<usize> = if artifacts.kind == FormulationKind::Ef {
        decode_ef_support(inst, cycles, artifacts, assignment)?
    } else {
        artifacts
            .cycle_vars
            .iter()
            .enumerate()
            .filter(|&(_, &v)| assignment[v] == ONE)
            .map(|(k, _)| k)
            .collect()
    };
    let exchange = Exchange::new(cycles, &indices)?;
    let transplants = exchange.transplants(cycles);
    let expr = artifacts.transplant_value(assignment)?;
    if Rat::from(transplants) != expr {
        return Err(DecodeError::TransplantMismatch(transplants, expr));
    }
    Ok(exchange)
}

/// Walks the selected y arcs into vertex-disjoint cycles and maps each onto
/// its canonical cycle index. Any support that is not a disjoint union of
/// legal cycles signals a builder bug.
fn decode_ef_support(
    inst: &Instance,
    cycles: &[Cycle],
    artifacts: &BuildArtifacts,
    assignment: &[Rat],
) -> Result<Vec<usize>, DecodeError> {
    let mut succ: BTreeMap<VertexId, VertexId> = BTreeMap::new();
    for (&(from, to), &var) in &artifacts.y_vars {
        if assignment[var] == ONE {
            if succ.insert(from, to).is_some() {
                return Err(DecodeError::BadSupport(format!(
                    "vertex {from} has two selected out-arcs"
                )));
            }
        }
    }
    let index_of: BTreeMap<&[VertexId], usize> = cycles
        .iter()
        .enumerate()
        .map(|(k, c)| (c.vertices.as_slice(), k))
        .collect();
    let mut visited: std::collections::BTreeSet<VertexId> = Default::default();
    let mut chosen = Vec::new();
    for (&start, _) in &succ {
        if visited.contains(&start) {
            continue;
        }
        let mut walk = vec![start];
        let mut cur = start;
        loop {
            let Some(&next) = succ.get(&cur) else {
                return Err(DecodeError::BadSupport(format!(
                    "support path from {start} dead-ends at {cur}"
                )));
            };
            if next == start {
                break;
            }
            if walk.contains(&next) {
                return Err(DecodeError::BadSupport(format!(
                    "support from {start} re-enters {next} without closing"
                )));
            }
            walk.push(next);
            cur = next;
        }
        visited.extend(walk.iter().copied());
        let canon = Cycle::canonicalize(walk, inst);
        let Some(&k) = index_of.get(canon.vertices.as_slice()) else {
            return Err(DecodeError::BadSupport(format!(
                "support cycle {:?} is not in the enumerated cycle set",
                canon.vertices
            )));
        };
        chosen.push(k);
    }
    chosen.sort_unstable();
    Ok(chosen)
}
