//! Relaxed stability: minimize the number of blocking cycles subject to a
//! budget on sacrificed transplants.
//!
//! Every stability row `a u >= b` of the base formulation gains a binary
//! slack `tau_c` as `a u + b tau_c >= b`; `tau_c = 1` marks the cycle as
//! blocking in the solution. The objective minimizes
//! `(|V|+1) * sum(tau) - (base objective)`, so one fewer blocking cycle
//! always beats any gain in transplants, and the budget row keeps the
//! transplant count at or above `ceil(M* - kappa M*)`.

use crate::enumerate::{enumerate_paths, Cycle};
use crate::instance::Instance;
use crate::milp::rational::{Rat, ONE, ZERO};
use crate::milp::{ObjectiveSense, RowSense};
use crate::prefs::build_pref_sets;

use super::{
    build_cef, build_cf, build_ef, BuildArtifacts, CefObjective, FormulationError,
    FormulationKind, StabilityMode,
};

pub fn build_relaxed(
    inst: &Instance,
    cycles: &[Cycle],
    base: FormulationKind,
    mode: StabilityMode,
    m_star: u32,
    kappa: Rat,
) -> Result<BuildArtifacts, FormulationError> {
    if kappa < ZERO || kappa > ONE {
        return Err(FormulationError::BadKappa(kappa));
    }
    let mut artifacts = match base {
        FormulationKind::Cf => {
            let pref_sets = build_pref_sets(inst, cycles);
            build_cf(inst, cycles, &pref_sets, mode)?
        }
        FormulationKind::Cef => build_cef(inst, cycles, mode, CefObjective::XObjective)?,
        FormulationKind::Ef => build_ef(inst, cycles, &enumerate_paths(inst), mode)?,
    };

    let model = &mut artifacts.model;
    model.sense = ObjectiveSense::Minimize;
    for idx in 0..model.variables().len() {
        let old = model.variables()[idx].objective;
        model.set_objective_coeff(idx, old.neg());
    }
    // One more than the vertex count: the transplant term never reaches it,
    // so fewer blocking cycles always wins.
    let tau_weight = Rat::int(inst.n_vertices() as i64 + 1);
    let mut tau_vars = Vec::with_capacity(cycles.len());
    for (k, &row) in artifacts.stab_rows.iter().enumerate() {
        let tau = model.add_binary(format!("tau_c{k}"), tau_weight)?;
        let b = model.constraints()[row].rhs;
        model.add_term_to_constraint(row, tau, b)?;
        tau_vars.push(tau);
    }
    artifacts.tau_vars = tau_vars;

    // Transplants may drop at most kappa * M*, rounded in the solver's favor.
    let kept = Rat::int(m_star as i64).mul(ONE.sub(kappa)?)?;
    let rhs = Rat::int(kept.ceil());
    model.add_constraint(
        "budget",
        artifacts.transplant_terms.clone(),
        RowSense::Ge,
        rhs,
    )?;
    Ok(artifacts)
}
