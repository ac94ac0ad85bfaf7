//! Brute-force ground truth for tiny instances: exhaustive exchange
//! enumeration, per-mode optima and minimum-blocking scans. This module is
//! test infrastructure, not a solver; it refuses instances beyond its guard.

use thiserror::Error;

use crate::enumerate::Cycle;
use crate::formulations::StabilityMode;
use crate::instance::Instance;
use crate::stability::{find_blocking, find_weakly_blocking, Exchange};

/// Exchange enumeration is exponential in the number of cycles.
pub const MAX_ORACLE_CYCLES: usize = 25;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle guard exceeded: {0} cycles (limit {MAX_ORACLE_CYCLES})")]
    TooManyCycles(usize),
}

/// Every set of pairwise vertex-disjoint cycles, each exactly once. The empty
/// exchange is always first.
pub fn all_exchanges(inst: &Instance, cycles: &[Cycle]) -> Result<Vec<Exchange>, OracleError> {
    if cycles.len() > MAX_ORACLE_CYCLES {
        return Err(OracleError::TooManyCycles(cycles.len()));
    }
    let masks: Vec<u128> = cycles
        .iter()
        .map(|c| {
            c.vertices
                .iter()
                .fold(0u128, |m, v| m | (1u128 << v.index()))
        })
        .collect();
    debug_assert!(inst.n_vertices() <= 128);
    let mut out = Vec::new();
    let mut chosen: Vec<usize> = Vec::new();
    fn recurse(
        idx: usize,
        occupied: u128,
        masks: &[u128],
        cycles: &[Cycle],
        chosen: &mut Vec<usize>,
        out: &mut Vec<Exchange>,
    ) {
        if idx == masks.len() {
            out.push(Exchange::new(cycles, chosen).expect("disjoint by construction"));
            return;
        }
        recurse(idx + 1, occupied, masks, cycles, chosen, out);
        if occupied & masks[idx] == 0 {
            chosen.push(idx);
            recurse(idx + 1, occupied | masks[idx], masks, cycles, chosen, out);
            chosen.pop();
        }
    }
    recurse(0, 0, &masks, cycles, &mut chosen, &mut out);
    Ok(out)
}

fn passes_mode(inst: &Instance, cycles: &[Cycle], ex: &Exchange, mode: StabilityMode) -> bool {
    match mode {
        StabilityMode::Stable => find_blocking(inst, cycles, ex).is_empty(),
        StabilityMode::StronglyStableStrict | StabilityMode::StronglyStableWeak => {
            find_weakly_blocking(inst, cycles, ex).is_empty()
        }
    }
}

/// Maximum transplant count over all exchanges passing the mode's verifier
/// (over all exchanges when `mode` is `None`). Returns `None` when no
/// exchange passes; the unconstrained problem always has the empty exchange.
pub fn oracle_optimum(
    inst: &Instance,
    cycles: &[Cycle],
    mode: Option<StabilityMode>,
) -> Result<Option<(u32, Exchange)>, OracleError> {
    let mut best: Option<(u32, Exchange)> = None;
    for ex in all_exchanges(inst, cycles)? {
        if let Some(m) = mode {
            if !passes_mode(inst, cycles, &ex, m) {
                continue;
            }
        }
        let t = ex.transplants(cycles);
        if best.as_ref().map(|(bt, _)| t > *bt).unwrap_or(true) {
            best = Some((t, ex));
        }
    }
    Ok(best)
}

/// Minimum blocking-cycle count over exchanges with at least
/// `m_star - budget_r` transplants, tie-broken by more transplants. The
/// blocking notion follows `mode` (blocking for Stable, weakly blocking for
/// the strongly stable modes). Returns `(min blocking count, transplants)`.
pub fn oracle_min_blocking(
    inst: &Instance,
    cycles: &[Cycle],
    mode: StabilityMode,
    budget_r: u32,
    m_star: u32,
) -> Result<(u32, u32), OracleError> {
    let floor = m_star.saturating_sub(budget_r);
    let mut best: Option<(u32, u32)> = None;
    for ex in all_exchanges(inst, cycles)? {
        let t = ex.transplants(cycles);
        if t < floor {
            continue;
        }
        let count = match mode {
            StabilityMode::Stable => find_blocking(inst, cycles, &ex).len() as u32,
            _ => find_weakly_blocking(inst, cycles, &ex).len() as u32,
        };
        let better = match best {
            None => true,
            Some((bc, bt)) => count < bc || (count == bc && t > bt),
        };
        if better {
            best = Some((count, t));
        }
    }
    Ok(best.expect("the empty exchange is always feasible at kappa <= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_cycles;
    use crate::instance::{Arc, PreferenceMode, VertexId, VertexKind};
    use crate::stability::verify;

    fn pairs_instance(
        n: u32,
        arcs: &[(u32, u32, u32)],
        k: u32,
        mode: PreferenceMode,
    ) -> Instance {
        let vs = (0..n).map(|v| (VertexId(v), VertexKind::Pair)).collect();
        let arcs = arcs
            .iter()
            .map(|&(f, t, r)| Arc {
                from: VertexId(f),
                to: VertexId(t),
                rank: r,
                weight: None,
                dummy: false,
            })
            .collect();
        Instance::new(vs, arcs, k, 1, mode).unwrap()
    }

    fn complete_pairs(n: u32, k: u32) -> Instance {
        let mut arcs = Vec::new();
        for f in 0..n {
            for t in 0..n {
                if f != t {
                    let rank = if f < t { f + 1 } else { f };
                    arcs.push((f, t, rank));
                }
            }
        }
        pairs_instance(n, &arcs, k, PreferenceMode::Strict)
    }

    fn two_cycle() -> Instance {
        pairs_instance(2, &[(0, 1, 1), (1, 0, 1)], 2, PreferenceMode::Strict)
    }

    fn ties_square() -> Instance {
        pairs_instance(
            4,
            &[(2, 1, 1), (0, 1, 1), (1, 2, 1), (3, 2, 1), (1, 0, 1), (2, 3, 1)],
            2,
            PreferenceMode::Weak,
        )
    }

    #[test]
    fn exchange_counts() {
        let inst = pairs_instance(2, &[(0, 1, 1)], 2, PreferenceMode::Strict);
        let cycles = enumerate_cycles(&inst);
        assert!(cycles.is_empty());
        assert_eq!(all_exchanges(&inst, &cycles).unwrap().len(), 1);

        let inst = two_cycle();
        let cycles = enumerate_cycles(&inst);
        assert_eq!(all_exchanges(&inst, &cycles).unwrap().len(), 2);

        // Three pairwise-intersecting 2-cycles: empty + 3 singletons.
        let inst = complete_pairs(3, 2);
        let cycles = enumerate_cycles(&inst);
        assert_eq!(cycles.len(), 3);
        assert_eq!(all_exchanges(&inst, &cycles).unwrap().len(), 4);
    }

    #[test]
    fn two_cycle_stable_optimum() {
        let inst = two_cycle();
        let cycles = enumerate_cycles(&inst);
        let (t, ex) = oracle_optimum(&inst, &cycles, Some(StabilityMode::Stable))
            .unwrap()
            .unwrap();
        assert_eq!(t, 2);
        assert_eq!(ex.cycle_indices(), &[0]);
    }

    #[test]
    fn ties_square_strongly_stable_optimum() {
        let inst = ties_square();
        let cycles = enumerate_cycles(&inst);
        let (t, ex) = oracle_optimum(&inst, &cycles, Some(StabilityMode::StronglyStableWeak))
            .unwrap()
            .unwrap();
        assert_eq!(t, 4);
        assert_eq!(ex.cycle_indices(), &[0, 2]); // {(a,i), (j,b)}
    }

    #[test]
    fn optima_are_monotone_across_modes_and_witnesses_verify() {
        for seed in 0..20 {
            for mode in [PreferenceMode::Strict, PreferenceMode::Weak] {
                let inst = Instance::generate(8, seed, mode, 3, 2).unwrap();
                let cycles = enumerate_cycles(&inst);
                if cycles.len() > MAX_ORACLE_CYCLES {
                    continue;
                }
                let strong_mode = match mode {
                    PreferenceMode::Strict => StabilityMode::StronglyStableStrict,
                    PreferenceMode::Weak => StabilityMode::StronglyStableWeak,
                };
                let unconstrained = oracle_optimum(&inst, &cycles, None).unwrap().unwrap();
                let stable = oracle_optimum(&inst, &cycles, Some(StabilityMode::Stable)).unwrap();
                let strong = oracle_optimum(&inst, &cycles, Some(strong_mode)).unwrap();
                if let Some((t, ex)) = &stable {
                    assert!(unconstrained.0 >= *t);
                    let rep = verify(&inst, &cycles, ex);
                    assert!(rep.is_stable);
                }
                if let Some((t, ex)) = &strong {
                    if let Some((ts, _)) = &stable {
                        assert!(ts >= t);
                    }
                    let rep = verify(&inst, &cycles, ex);
                    assert!(rep.is_strongly_stable);
                }
            }
        }
    }

    #[test]
    fn min_blocking_endpoints() {
        let inst = two_cycle();
        let cycles = enumerate_cycles(&inst);
        // Any budget: the unique maximum exchange is stable.
        for r in [0, 1, 2] {
            let (tau, t) =
                oracle_min_blocking(&inst, &cycles, StabilityMode::Stable, r, 2).unwrap();
            assert_eq!((tau, t), (0, 2));
        }
    }

    #[test]
    fn guard_rejects_large_cycle_sets() {
        let inst = complete_pairs(7, 4);
        let cycles = enumerate_cycles(&inst);
        assert!(cycles.len() > MAX_ORACLE_CYCLES);
        assert!(matches!(
            all_exchanges(&inst, &cycles),
            Err(OracleError::TooManyCycles(_))
        ));
    }
}
