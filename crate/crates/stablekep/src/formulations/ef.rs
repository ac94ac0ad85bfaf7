//! Edge formulation: binary arc-selection variables `y`, split into a
//! pair-cycle commodity `y^c` and a chain commodity `y^n` with per-vertex
//! flow conservation, bounded by explicit path cuts.
//!
//! Beyond the classic cuts (pair paths of K arcs bound `y^c`, NDD-rooted
//! paths bound `y^n`), the builder pins down structures that the two
//! commodities could otherwise smuggle past the length cuts: `y^c` is only
//! defined on pair-pair arcs, pure-pair circuits on `y^n` are cut at every
//! length above K, and a chain must close through its own NDD's dummy arc
//! (wrong-closure cuts). With these, every feasible 0/1 point is exactly a
//! disjoint union of enumerated cycles, which is what the stability rows and
//! the decoder assume.

use std::collections::{BTreeMap, BTreeSet};

use crate::enumerate::{
    ndd_rooted_paths_up_to, pair_cycles_in_range, pair_paths_exact, PathSets,
};
use crate::instance::{Instance, VertexId, VertexKind};
use crate::milp::rational::{Rat, ONE, ZERO};
use crate::milp::{MilpModel, ObjectiveSense, RowSense};

use super::{
    check_mode, y_stability_rows, BuildArtifacts, Cycle, FormulationError, FormulationKind,
    StabilityMode,
};

pub fn build_ef(
    inst: &Instance,
    cycles: &[Cycle],
    paths: &PathSets,
    mode: StabilityMode,
) -> Result<BuildArtifacts, FormulationError> {
    check_mode(inst, mode)?;
    let mut model = MilpModel::new(ObjectiveSense::Maximize);

    let mut y_vars = BTreeMap::new();
    let mut yc_vars = BTreeMap::new();
    let mut yn_vars = BTreeMap::new();
    for a in inst.arcs() {
        let obj = if a.dummy { ZERO } else { ONE };
        let v = model.add_binary(format!("y_{}_{}", a.from, a.to), obj)?;
        y_vars.insert((a.from, a.to), v);
    }
    for a in inst.arcs() {
        // The pair-cycle commodity never touches an NDD.
        if inst.kind(a.from) == VertexKind::Pair && inst.kind(a.to) == VertexKind::Pair {
            let v = model.add_binary(format!("yc_{}_{}", a.from, a.to), ZERO)?;
            yc_vars.insert((a.from, a.to), v);
        }
    }
    for a in inst.arcs() {
        let v = model.add_binary(format!("yn_{}_{}", a.from, a.to), ZERO)?;
        yn_vars.insert((a.from, a.to), v);
    }

    // Each donor donates at most once.
    for i in inst.vertices() {
        let outs = inst.out_neighbors(i);
        if outs.is_empty() {
            continue;
        }
        model.add_constraint(
            format!("out_v{i}"),
            outs.iter().map(|&j| (y_vars[&(i, j)], ONE)).collect(),
            RowSense::Le,
            ONE,
        )?;
    }

    // An arc is selected in exactly one commodity.
    for a in inst.arcs() {
        let mut terms = vec![(y_vars[&(a.from, a.to)], ONE)];
        if let Some(&yc) = yc_vars.get(&(a.from, a.to)) {
            terms.push((yc, ONE.neg()));
        }
        terms.push((yn_vars[&(a.from, a.to)], ONE.neg()));
        model.add_constraint(
            format!("split_{}_{}", a.from, a.to),
            terms,
            RowSense::Eq,
            ZERO,
        )?;
    }

    // Per-commodity flow conservation: kidneys received equal kidneys given.
    for v in inst.vertices() {
        let mut terms: Vec<(usize, Rat)> = Vec::new();
        for &(src, _) in inst.in_neighbors(v).expect("vertex") {
            if let Some(&yc) = yc_vars.get(&(src, v)) {
                terms.push((yc, ONE));
            }
        }
        for &dst in inst.out_neighbors(v) {
            if let Some(&yc) = yc_vars.get(&(v, dst)) {
                terms.push((yc, ONE.neg()));
            }
        }
        if !terms.is_empty() {
            model.add_constraint(format!("flowc_v{v}"), terms, RowSense::Eq, ZERO)?;
        }
        let mut terms: Vec<(usize, Rat)> = Vec::new();
        for &(src, _) in inst.in_neighbors(v).expect("vertex") {
            terms.push((yn_vars[&(src, v)], ONE));
        }
        for &dst in inst.out_neighbors(v) {
            terms.push((yn_vars[&(v, dst)], ONE.neg()));
        }
        if !terms.is_empty() {
            model.add_constraint(format!("flown_v{v}"), terms, RowSense::Eq, ZERO)?;
        }
    }

    // Arcs on no enumerated cycle can never be selected.
    let on_cycle: BTreeSet<(VertexId, VertexId)> =
        cycles.iter().flat_map(|c| c.arcs()).collect();
    for a in inst.arcs() {
        let arc = (a.from, a.to);
        if !on_cycle.contains(&arc) {
            model.add_constraint(
                format!("dead_{}_{}", a.from, a.to),
                vec![(y_vars[&arc], ONE)],
                RowSense::Eq,
                ZERO,
            )?;
        }
    }

    let k_max = inst.k_max() as i64;
    let l_max = inst.l_max() as i64;
    let mut path_no = 0usize;
    let mut path_row = |model: &mut MilpModel,
                        terms: Vec<(usize, Rat)>,
                        rhs: Rat|
     -> Result<(), FormulationError> {
        model.add_constraint(format!("path_p{path_no}"), terms, RowSense::Le, rhs)?;
        path_no += 1;
        Ok(())
    };

    // Pair paths of K arcs: a pair cycle longer than K would contain one.
    for p in &paths.pair_paths {
        let terms = p.arcs.iter().map(|arc| (yc_vars[arc], ONE)).collect();
        path_row(&mut model, terms, Rat::int(k_max - 1))?;
    }
    // NDD-rooted paths of L+1 arcs: a chain serving more than L pairs would
    // contain one.
    for p in &paths.ndd_paths {
        let terms = p.arcs.iter().map(|arc| (yn_vars[arc], ONE)).collect();
        path_row(&mut model, terms, Rat::int(l_max))?;
    }
    // Pair paths of L+1 arcs on the chain commodity: a pure-pair circuit of
    // more than L+1 vertices cannot ride y^n.
    for vs in pair_paths_exact(inst, inst.l_max() as usize + 1) {
        let terms = vs
            .windows(2)
            .map(|w| (yn_vars[&(w[0], w[1])], ONE))
            .collect();
        path_row(&mut model, terms, Rat::int(l_max))?;
    }
    // Remaining pure-pair circuits (lengths K+1..=L+1) on the chain
    // commodity are cut explicitly.
    let mut circuit_cuts: Vec<Vec<VertexId>> = Vec::new();
    pair_cycles_in_range(
        inst,
        inst.k_max() as usize + 1,
        inst.l_max() as usize + 1,
        &mut |vs| circuit_cuts.push(vs.to_vec()),
    );
    for vs in circuit_cuts {
        let n = vs.len();
        let terms = (0..n)
            .map(|i| (yn_vars[&(vs[i], vs[(i + 1) % n])], ONE))
            .collect();
        path_row(&mut model, terms, Rat::int(n as i64 - 1))?;
    }
    // A chain must close through its own NDD: a full NDD-rooted run plus a
    // dummy arc into a different NDD is forbidden.
    let ndds: Vec<VertexId> = inst.ndds().collect();
    if ndds.len() > 1 {
        for vs in ndd_rooted_paths_up_to(inst, inst.l_max() as usize) {
            let root = vs[0];
            let last = *vs.last().unwrap();
            let m = vs.len() as i64 - 1;
            for &other in &ndds {
                if other == root {
                    continue;
                }
                let mut terms: Vec<(usize, Rat)> = vs
                    .windows(2)
                    .map(|w| (yn_vars[&(w[0], w[1])], ONE))
                    .collect();
                terms.push((yn_vars[&(last, other)], ONE));
                path_row(&mut model, terms, Rat::int(m))?;
            }
        }
    }

    let stab_rows = y_stability_rows(&mut model, inst, cycles, mode, &y_vars)?;

    let transplant_terms = inst
        .arcs()
        .iter()
        .filter(|a| !a.dummy)
        .map(|a| (y_vars[&(a.from, a.to)], ONE))
        .collect();

    Ok(BuildArtifacts {
        model,
        kind: FormulationKind::Ef,
        cycle_vars: Vec::new(),
        y_vars,
        yc_vars,
        yn_vars,
        stab_rows,
        tau_vars: Vec::new(),
        transplant_terms,
    })
}
