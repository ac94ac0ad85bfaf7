//! Preference relations over vertices and cycles, and the per-(vertex, cycle)
//! sets B/S/E consumed by the cycle formulation: cycles weakly preferred,
//! strictly preferred, and equally good relative to a given cycle.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::enumerate::Cycle;
use crate::instance::{Instance, InstanceError, PreferenceMode, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleComparison {
    Prefers,
    Indifferent,
    Dispreferred,
}

#[derive(Debug, Error)]
pub enum PrefsError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("vertex {0} is not on cycle index {1}")]
    VertexNotOnCycle(VertexId, usize),
}

/// True iff `j` prefers `i` to `i2`, i.e. rank(i -> j) < rank(i2 -> j).
pub fn prefers(
    inst: &Instance,
    j: VertexId,
    i: VertexId,
    i2: VertexId,
) -> Result<bool, PrefsError> {
    Ok(inst.rank(i, j)? < inst.rank(i2, j)?)
}

/// True iff `j` ranks `i` and `i2` equally.
pub fn indifferent(
    inst: &Instance,
    j: VertexId,
    i: VertexId,
    i2: VertexId,
) -> Result<bool, PrefsError> {
    Ok(inst.rank(i, j)? == inst.rank(i2, j)?)
}

/// Compares two cycles through `v` by the rank of `v`'s in-arc in each.
pub fn cycle_pref(
    inst: &Instance,
    v: VertexId,
    c_idx: usize,
    c2_idx: usize,
    cycles: &[Cycle],
) -> Result<CycleComparison, PrefsError> {
    let r1 = in_rank(inst, v, c_idx, cycles)?;
    let r2 = in_rank(inst, v, c2_idx, cycles)?;
    Ok(if r1 < r2 {
        CycleComparison::Prefers
    } else if r1 == r2 {
        CycleComparison::Indifferent
    } else {
        CycleComparison::Dispreferred
    })
}

fn in_rank(
    inst: &Instance,
    v: VertexId,
    c_idx: usize,
    cycles: &[Cycle],
) -> Result<u32, PrefsError> {
    let (from, to) = cycles[c_idx]
        .in_arc_of(v)
        .ok_or(PrefsError::VertexNotOnCycle(v, c_idx))?;
    Ok(inst.rank(from, to)?)
}

/// B/S/E tables for every `(vertex, cycle)` incidence, stored as sorted index
/// lists. Built once per instance; the CF and CEF constraint generators walk
/// them repeatedly.
#[derive(Clone, Debug, Default)]
pub struct CyclePrefSets {
    entries: BTreeMap<(VertexId, usize), PrefEntry>,
}

#[derive(Clone, Debug, Default)]
struct PrefEntry {
    better: Vec<usize>,
    strictly_better: Vec<usize>,
    equal: Vec<usize>,
}

impl CyclePrefSets {
    /// Cycles (other than `c`) weakly preferred by `v` to `c`.
    pub fn better(&self, v: VertexId, c: usize) -> &[usize] {
        self.entries
            .get(&(v, c))
            .map(|e| e.better.as_slice())
            .unwrap_or(&[])
    }

    /// Cycles `v` strictly prefers to `c`.
    pub fn strictly_better(&self, v: VertexId, c: usize) -> &[usize] {
        self.entries
            .get(&(v, c))
            .map(|e| e.strictly_better.as_slice())
            .unwrap_or(&[])
    }

    /// Cycles (other than `c`) equally good for `v` as `c`.
    pub fn equal(&self, v: VertexId, c: usize) -> &[usize] {
        self.entries
            .get(&(v, c))
            .map(|e| e.equal.as_slice())
            .unwrap_or(&[])
    }
}

/// Builds the complete B/S/E tables from the cycle list.
pub fn build_pref_sets(inst: &Instance, cycles: &[Cycle]) -> CyclePrefSets {
    let mut through: Vec<Vec<(usize, u32)>> = vec![Vec::new(); inst.n_vertices()];
    for (idx, c) in cycles.iter().enumerate() {
        for v in &c.vertices {
            let (from, to) = c.in_arc_of(*v).expect("vertex on its own cycle");
            let rank = inst.rank(from, to).expect("cycle arcs exist");
            through[v.index()].push((idx, rank));
        }
    }
    let mut sets = CyclePrefSets::default();
    for v in inst.vertices() {
        let list = &through[v.index()];
        for &(c, rank_c) in list {
            let mut entry = PrefEntry::default();
            for &(s, rank_s) in list {
                if s == c {
                    continue;
                }
                if rank_s < rank_c {
                    entry.strictly_better.push(s);
                    entry.better.push(s);
                } else if rank_s == rank_c {
                    entry.equal.push(s);
                    entry.better.push(s);
                }
            }
            sets.entries.insert((v, c), entry);
        }
    }
    sets
}

/// Strict-mode sanity: equal in-rank implies the identical in-arc, so E sets
/// reduce to cycles sharing the vertex's in-arc.
pub fn equal_sets_share_in_arc(inst: &Instance, cycles: &[Cycle], sets: &CyclePrefSets) -> bool {
    if inst.mode() != PreferenceMode::Strict {
        return true;
    }
    for (idx, c) in cycles.iter().enumerate() {
        for &v in &c.vertices {
            let arc = c.in_arc_of(v).unwrap();
            for &s in sets.equal(v, idx) {
                if cycles[s].in_arc_of(v) != Some(arc) {
                    return false;
                }
            }
        }
    }
    true
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

    /// a=0, b=1, c=2, d=3 -> j=4 with ranks 1, 2, 2, 3.
    fn fan() -> Instance {
        pairs_instance(
            5,
            &[(0, 4, 1), (1, 4, 2), (2, 4, 2), (3, 4, 3)],
            2,
            PreferenceMode::Weak,
        )
    }

    /// Ties example: 2-cycles (a,i), (i,j), (j,b) where i ranks a and j
    /// equally and j ranks i and b equally. Ids: a=0, i=1, j=2, b=3.
    pub(crate) fn ties_square() -> Instance {
        pairs_instance(
            4,
            &[
                (2, 1, 1), // j -> i, rank p
                (0, 1, 1), // a -> i, rank p
                (1, 2, 1), // i -> j, rank q
                (3, 2, 1), // b -> j, rank q
                (1, 0, 1), // i -> a
                (2, 3, 1), // j -> b
            ],
            2,
            PreferenceMode::Weak,
        )
    }

    #[test]
    fn fan_preferences() {
        let inst = fan();
        let (a, b, c, d, j) = (VertexId(0), VertexId(1), VertexId(2), VertexId(3), VertexId(4));
        assert!(prefers(&inst, j, a, b).unwrap());
        assert!(!prefers(&inst, j, b, c).unwrap());
        assert!(!prefers(&inst, j, c, b).unwrap());
        assert!(!prefers(&inst, j, a, a).unwrap());
        assert!(indifferent(&inst, j, b, c).unwrap());
        assert!(indifferent(&inst, j, a, a).unwrap());
        assert!(!indifferent(&inst, j, a, d).unwrap());
        assert!(prefers(&inst, j, b, d).unwrap());
    }

    #[test]
    fn missing_arc_is_an_error() {
        let inst = fan();
        assert!(prefers(&inst, VertexId(4), VertexId(0), VertexId(4)).is_err());
        assert!(indifferent(&inst, VertexId(0), VertexId(1), VertexId(2)).is_err());
    }

    #[test]
    fn ties_square_cycle_preferences() {
        let inst = ties_square();
        let cycles = enumerate_cycles(&inst);
        // Canonical order: [a,i] < [i,j] < [j,b].
        assert_eq!(cycles.len(), 3);
        let ai = 0;
        let ij = 1;
        let jb = 2;
        let i = VertexId(1);
        let j = VertexId(2);
        assert_eq!(
            cycle_pref(&inst, i, ai, ij, &cycles).unwrap(),
            CycleComparison::Indifferent
        );
        assert_eq!(
            cycle_pref(&inst, i, ij, ij, &cycles).unwrap(),
            CycleComparison::Indifferent
        );
        assert_eq!(
            cycle_pref(&inst, j, ij, jb, &cycles).unwrap(),
            CycleComparison::Indifferent
        );
        assert!(cycle_pref(&inst, VertexId(0), ai, ij, &cycles).is_err());
    }

    #[test]
    fn strictly_ranked_cycles_compare_by_rank() {
        // Cycle via a rank-1 arc beats a cycle via a rank-3 arc into the
        // same vertex: j=2 with in-arcs from a=0 (rank 1) and d=1 (rank 3),
        // plus a rank-2 filler to keep ranks within the in-degree.
        let inst = pairs_instance(
            4,
            &[
                (0, 2, 1),
                (1, 2, 3),
                (3, 2, 2),
                (2, 0, 1),
                (2, 1, 1),
                (2, 3, 1),
            ],
            2,
            PreferenceMode::Strict,
        );
        let cycles = enumerate_cycles(&inst);
        let j = VertexId(2);
        let via_a = cycles
            .iter()
            .position(|c| c.contains(VertexId(0)) && c.contains(j))
            .unwrap();
        let via_d = cycles
            .iter()
            .position(|c| c.contains(VertexId(1)) && c.contains(j))
            .unwrap();
        assert_eq!(
            cycle_pref(&inst, j, via_a, via_d, &cycles).unwrap(),
            CycleComparison::Prefers
        );
        assert_eq!(
            cycle_pref(&inst, j, via_d, via_a, &cycles).unwrap(),
            CycleComparison::Dispreferred
        );
    }

    #[test]
    fn ties_square_pref_sets() {
        let inst = ties_square();
        let cycles = enumerate_cycles(&inst);
        let sets = build_pref_sets(&inst, &cycles);
        let i = VertexId(1);
        let a = VertexId(0);
        // E(i, (i,j)) = {(a,i)}, S(i, (i,j)) = {}.
        assert_eq!(sets.equal(i, 1), &[0]);
        assert!(sets.strictly_better(i, 1).is_empty());
        assert_eq!(sets.better(i, 1), &[0]);
        // A vertex on exactly one cycle has empty sets.
        assert!(sets.better(a, 0).is_empty());
        assert!(sets.strictly_better(a, 0).is_empty());
        assert!(sets.equal(a, 0).is_empty());
    }

    #[test]
    fn pref_sets_agree_with_pairwise_scan() {
        for seed in 0..12 {
            for mode in [PreferenceMode::Strict, PreferenceMode::Weak] {
                let inst = Instance::generate(8, seed, mode, 3, 2).unwrap();
                let cycles = enumerate_cycles(&inst);
                let sets = build_pref_sets(&inst, &cycles);
                for (idx, c) in cycles.iter().enumerate() {
                    for &v in &c.vertices {
                        let mut b = Vec::new();
                        let mut s = Vec::new();
                        let mut e = Vec::new();
                        for (other, oc) in cycles.iter().enumerate() {
                            if other == idx || !oc.contains(v) {
                                continue;
                            }
                            match cycle_pref(&inst, v, other, idx, &cycles).unwrap() {
                                CycleComparison::Prefers => {
                                    s.push(other);
                                    b.push(other);
                                }
                                CycleComparison::Indifferent => {
                                    e.push(other);
                                    b.push(other);
                                }
                                CycleComparison::Dispreferred => {}
                            }
                        }
                        assert_eq!(sets.better(v, idx), b.as_slice());
                        assert_eq!(sets.strictly_better(v, idx), s.as_slice());
                        assert_eq!(sets.equal(v, idx), e.as_slice());
                        // S and E partition B; c itself never appears.
                        assert!(!sets.better(v, idx).contains(&idx));
                    }
                }
                assert!(equal_sets_share_in_arc(&inst, &cycles, &sets));
            }
        }
    }

    #[test]
    fn cycle_pref_is_antisymmetric_and_transitive() {
        for seed in 0..10 {
            let inst = Instance::generate(7, seed, PreferenceMode::Weak, 3, 2).unwrap();
            let cycles = enumerate_cycles(&inst);
            for v in inst.vertices() {
                let through: Vec<usize> = (0..cycles.len())
                    .filter(|&i| cycles[i].contains(v))
                    .collect();
                for &x in &through {
                    for &y in &through {
                        let xy = cycle_pref(&inst, v, x, y, &cycles).unwrap();
                        let yx = cycle_pref(&inst, v, y, x, &cycles).unwrap();
                        match xy {
                            CycleComparison::Prefers => {
                                assert_eq!(yx, CycleComparison::Dispreferred)
                            }
                            CycleComparison::Indifferent => {
                                assert_eq!(yx, CycleComparison::Indifferent)
                            }
                            CycleComparison::Dispreferred => {
                                assert_eq!(yx, CycleComparison::Prefers)
                            }
                        }
                        for &z in &through {
                            let yz = cycle_pref(&inst, v, y, z, &cycles).unwrap();
                            let xz = cycle_pref(&inst, v, x, z, &cycles).unwrap();
                            if xy == CycleComparison::Prefers && yz == CycleComparison::Prefers {
                                assert_eq!(xz, CycleComparison::Prefers);
                            }
                            if xy == CycleComparison::Indifferent
                                && yz == CycleComparison::Indifferent
                            {
                                assert_eq!(xz, CycleComparison::Indifferent);
                            }
                        }
                    }
                }
            }
        }
    }
}
