//! Exchange feasibility and the blocking-cycle verifier.
//!
//! The verifier implements the propositional characterizations that the IP
//! stability constraints encode (a cycle fails to block iff some of its
//! vertices is matched at least as well / strictly better), so a solver
//! report certified here certifies exactly what the constraints enforce. The
//! textbook definitional forms live in the test module as a cross-check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumerate::Cycle;
use crate::instance::{Instance, PreferenceMode, VertexId};

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("cycle index {0} out of range (only {1} cycles)")]
    BadCycleIndex(usize, usize),
    #[error("cycles {0} and {1} share vertex {2}")]
    OverlappingCycles(usize, usize, VertexId),
}

/// A set of vertex-disjoint cycles plus the induced matched-in-arc map
/// (for every matched vertex, the donor vertex it receives from).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Exchange {
    cycle_indices: Vec<usize>,
    matched_in_arc: BTreeMap<VertexId, VertexId>,
}

impl Exchange {
    pub fn empty() -> Exchange {
        Exchange {
            cycle_indices: Vec::new(),
            matched_in_arc: BTreeMap::new(),
        }
    }

    /// Validates vertex-disjointness and index bounds.
    pub fn new(cycles: &[Cycle], indices: &[usize]) -> Result<Exchange, StabilityError> {
        let mut sorted: Vec<usize> = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut owner: BTreeMap<VertexId, usize> = BTreeMap::new();
        let mut matched = BTreeMap::new();
        for &idx in &sorted {
            let c = cycles
                .get(idx)
                .ok_or(StabilityError::BadCycleIndex(idx, cycles.len()))?;
            for &v in &c.vertices {
                if let Some(&prev) = owner.get(&v) {
                    return Err(StabilityError::OverlappingCycles(prev, idx, v));
                }
                owner.insert(v, idx);
                let (from, _) = c.in_arc_of(v).expect("vertex on its own cycle");
                matched.insert(v, from);
            }
        }
        Ok(Exchange {
            cycle_indices: sorted,
            matched_in_arc: matched,
        })
    }

    pub fn cycle_indices(&self) -> &[usize] {
        &self.cycle_indices
    }

    pub fn contains_cycle(&self, idx: usize) -> bool {
        self.cycle_indices.binary_search(&idx).is_ok()
    }

    pub fn is_matched(&self, v: VertexId) -> bool {
        self.matched_in_arc.contains_key(&v)
    }

    /// The donor vertex `v` receives from, if matched.
    pub fn matched_in_arc(&self, v: VertexId) -> Option<VertexId> {
        self.matched_in_arc.get(&v).copied()
    }

    /// Total transplants: the sum of selected cycle weights.
    pub fn transplants(&self, cycles: &[Cycle]) -> u32 {
        self.cycle_indices.iter().map(|&i| cycles[i].weight).sum()
    }
}

/// True iff the selected cycles exist and are pairwise vertex-disjoint.
pub fn check_feasible(
    _inst: &Instance,
    cycles: &[Cycle],
    indices: &[usize],
) -> Result<bool, StabilityError> {
    for &idx in indices {
        if idx >= cycles.len() {
            return Err(StabilityError::BadCycleIndex(idx, cycles.len()));
        }
    }
    Ok(Exchange::new(cycles, indices).is_ok())
}

/// Rank at which `v` is matched in the exchange, if matched.
fn matched_rank(inst: &Instance, exchange: &Exchange, v: VertexId) -> Option<u32> {
    exchange
        .matched_in_arc(v)
        .map(|from| inst.rank(from, v).expect("matched arc exists"))
}

/// Blocking cycles: cycle `c` blocks unless some arc `(i, j)` of `c` has `j`
/// matched at a rank at least as good as `rank(i -> j)`. Cycles inside the
/// exchange satisfy their own arcs and never block.
pub fn find_blocking(inst: &Instance, cycles: &[Cycle], exchange: &Exchange) -> Vec<usize> {
    let mut blocking = Vec::new();
    for (idx, c) in cycles.iter().enumerate() {
        let escaped = c.arcs().any(|(i, j)| {
            matched_rank(inst, exchange, j)
                .map(|mr| mr <= inst.rank(i, j).expect("cycle arc"))
                .unwrap_or(false)
        });
        if !escaped {
            blocking.push(idx);
        }
    }
    blocking
}

/// Weakly blocking cycles, per the instance's preference mode.
///
/// Strict: `c` outside the exchange weakly blocks unless some vertex of `c`
/// is matched strictly better than its in-arc in `c`.
///
/// Weak: `c` outside the exchange weakly blocks unless either every vertex of
/// `c` is matched at exactly the rank of its in-arc in `c`, or some vertex is
/// matched strictly better.
pub fn find_weakly_blocking(inst: &Instance, cycles: &[Cycle], exchange: &Exchange) -> Vec<usize> {
    let mut weakly = Vec::new();
    for (idx, c) in cycles.iter().enumerate() {
        if exchange.contains_cycle(idx) {
            continue;
        }
        let strictly_better_somewhere = c.arcs().any(|(i, j)| {
            matched_rank(inst, exchange, j)
                .map(|mr| mr < inst.rank(i, j).expect("cycle arc"))
                .unwrap_or(false)
        });
        let escaped = match inst.mode() {
            PreferenceMode::Strict => strictly_better_somewhere,
            PreferenceMode::Weak => {
                let all_equal = c.arcs().all(|(i, j)| {
                    matched_rank(inst, exchange, j)
                        .map(|mr| mr == inst.rank(i, j).expect("cycle arc"))
                        .unwrap_or(false)
                });
                all_equal || strictly_better_somewhere
            }
        };
        if !escaped {
            weakly.push(idx);
        }
    }
    weakly
}

/// Census of blocking and weakly blocking cycles for an exchange.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub blocking: Vec<usize>,
    pub weakly_blocking: Vec<usize>,
    pub is_stable: bool,
    pub is_strongly_stable: bool,
}

pub fn verify(inst: &Instance, cycles: &[Cycle], exchange: &Exchange) -> StabilityReport {
    let blocking = find_blocking(inst, cycles, exchange);
    let weakly_blocking = find_weakly_blocking(inst, cycles, exchange);
    StabilityReport {
        is_stable: blocking.is_empty(),
        is_strongly_stable: weakly_blocking.is_empty(),
        blocking,
        weakly_blocking,
    }
}

/// The verification report written by the CLI and FFI surfaces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub feasible: bool,
    pub transplants: u32,
    pub blocking: Vec<usize>,
    pub weakly_blocking: Vec<usize>,
}

/// Relative transplant loss of a stable solution versus the unconstrained
/// maximum, as a percentage.
pub fn price_of_stability(m_star: u32, m_s: u32) -> Result<f64, String> {
    if m_star == 0 {
        return Err("price of stability undefined for m_star = 0".into());
    }
    if m_s > m_star {
        return Err(format!("m_s = {m_s} exceeds m_star = {m_star}"));
    }
    Ok((m_star - m_s) as f64 / m_star as f64 * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_cycles;
    use crate::instance::{Arc, VertexKind};

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

    fn two_cycle() -> Instance {
        pairs_instance(2, &[(0, 1, 1), (1, 0, 1)], 2, PreferenceMode::Strict)
    }

    /// Ties example: a=0, i=1, j=2, b=3. Cycles (a,i), (i,j), (j,b); i is
    /// indifferent between a and j, j between i and b.
    fn ties_square() -> Instance {
        pairs_instance(
            4,
            &[(2, 1, 1), (0, 1, 1), (1, 2, 1), (3, 2, 1), (1, 0, 1), (2, 3, 1)],
            2,
            PreferenceMode::Weak,
        )
    }

    /// Definitional form of Definitions 6/7, used only to cross-check the
    /// propositional verifier. A vertex counts as strictly improving if it is
    /// unmatched or ranked strictly better in `c` than in its exchange cycle.
    fn definitional_blocking(
        inst: &Instance,
        cycles: &[Cycle],
        exchange: &Exchange,
        weak: bool,
    ) -> Vec<usize> {
        let mut out = Vec::new();
        'cycle: for (idx, c) in cycles.iter().enumerate() {
            if exchange.contains_cycle(idx) {
                continue;
            }
            let mut any_strict = false;
            for (i, j) in c.arcs() {
                let rank_in_c = inst.rank(i, j).unwrap();
                match matched_rank(inst, exchange, j) {
                    None => any_strict = true, // unmatched always prefers c
                    Some(mr) => {
                        if rank_in_c < mr {
                            any_strict = true;
                        } else if rank_in_c == mr {
                            if !weak {
                                continue 'cycle; // indifference is not enough
                            }
                        } else {
                            continue 'cycle; // j is better off in M
                        }
                    }
                }
            }
            if !weak || any_strict {
                out.push(idx);
            }
        }
        out
    }

    #[test]
    fn empty_exchange_on_two_cycle_is_blocked() {
        let inst = two_cycle();
        let cycles = enumerate_cycles(&inst);
        let ex = Exchange::empty();
        assert_eq!(find_blocking(&inst, &cycles, &ex), vec![0]);
        let full = Exchange::new(&cycles, &[0]).unwrap();
        assert!(find_blocking(&inst, &cycles, &full).is_empty());
        assert!(find_weakly_blocking(&inst, &cycles, &full).is_empty());
    }

    #[test]
    fn feasibility_checks() {
        let inst = ties_square();
        let cycles = enumerate_cycles(&inst); // (a,i), (i,j), (j,b)
        assert!(check_feasible(&inst, &cycles, &[]).unwrap());
        assert!(check_feasible(&inst, &cycles, &[0, 2]).unwrap());
        assert!(!check_feasible(&inst, &cycles, &[0, 1]).unwrap());
        assert!(check_feasible(&inst, &cycles, &[7]).is_err());
        let ex = Exchange::new(&cycles, &[0, 2]).unwrap();
        assert_eq!(ex.transplants(&cycles), 4);
    }

    #[test]
    fn ties_square_outer_matching_is_strongly_stable() {
        let inst = ties_square();
        let cycles = enumerate_cycles(&inst);
        let m = Exchange::new(&cycles, &[0, 2]).unwrap(); // {(a,i), (j,b)}
        assert!(find_blocking(&inst, &cycles, &m).is_empty());
        assert!(find_weakly_blocking(&inst, &cycles, &m).is_empty());
    }

    #[test]
    fn ties_square_inner_matching_is_stable_but_not_strongly() {
        let inst = ties_square();
        let cycles = enumerate_cycles(&inst);
        let m = Exchange::new(&cycles, &[1]).unwrap(); // {(i,j)}
        let report = verify(&inst, &cycles, &m);
        assert!(report.is_stable);
        assert!(!report.is_strongly_stable);
        // Both outer 2-cycles weakly block: a (resp. b) is unmatched and the
        // shared vertex sits at an equal rank, so neither escape applies.
        assert_eq!(report.weakly_blocking, vec![0, 2]);
    }

    #[test]
    fn full_cycle_set_matched_leaves_nothing_outside() {
        let inst = pairs_instance(
            4,
            &[(0, 1, 1), (1, 0, 1), (2, 3, 1), (3, 2, 1)],
            2,
            PreferenceMode::Weak,
        );
        let cycles = enumerate_cycles(&inst);
        let m = Exchange::new(&cycles, &[0, 1]).unwrap();
        assert!(find_weakly_blocking(&inst, &cycles, &m).is_empty());
    }

    #[test]
    fn blocking_subset_of_weakly_blocking() {
        for seed in 0..25 {
            for mode in [PreferenceMode::Strict, PreferenceMode::Weak] {
                let inst = Instance::generate(8, seed, mode, 3, 2).unwrap();
                let cycles = enumerate_cycles(&inst);
                if cycles.len() > crate::oracle::MAX_ORACLE_CYCLES {
                    continue;
                }
                let exchanges = crate::oracle::all_exchanges(&inst, &cycles).unwrap();
                for ex in &exchanges {
                    let blocking = find_blocking(&inst, &cycles, ex);
                    let weakly = find_weakly_blocking(&inst, &cycles, ex);
                    for b in &blocking {
                        assert!(weakly.contains(b), "seed {seed}: {b} blocks but not weakly");
                        assert!(!ex.contains_cycle(*b));
                    }
                    for w in &weakly {
                        assert!(!ex.contains_cycle(*w));
                    }
                }
            }
        }
    }

    #[test]
    fn propositional_verifier_matches_definitions() {
        for seed in 0..30 {
            for mode in [PreferenceMode::Strict, PreferenceMode::Weak] {
                let inst = Instance::generate(8, seed, mode, 3, 2).unwrap();
                let cycles = enumerate_cycles(&inst);
                if cycles.len() > 18 {
                    continue;
                }
                let exchanges = crate::oracle::all_exchanges(&inst, &cycles).unwrap();
                for ex in &exchanges {
                    let got: Vec<usize> = find_blocking(&inst, &cycles, ex);
                    let def = definitional_blocking(&inst, &cycles, ex, false);
                    assert_eq!(got, def, "blocking mismatch, seed {seed} {mode:?}");
                    let got_w = find_weakly_blocking(&inst, &cycles, ex);
                    let def_w = definitional_blocking(&inst, &cycles, ex, true);
                    assert_eq!(got_w, def_w, "weak mismatch, seed {seed} {mode:?}");
                }
            }
        }
    }

    #[test]
    fn price_of_stability_formula() {
        assert_eq!(price_of_stability(10, 10).unwrap(), 0.0);
        assert_eq!(price_of_stability(10, 9).unwrap(), 10.0);
        assert_eq!(price_of_stability(40, 36).unwrap(), 10.0);
        assert!(price_of_stability(0, 0).is_err());
        assert!(price_of_stability(5, 6).is_err());
    }
}
