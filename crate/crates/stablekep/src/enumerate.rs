//! Bounded enumeration of exchange cycles, chains and the path sets needed
//! by the edge formulation.
//!
//! A pair cycle has 2..=K pair vertices. A chain is modeled as a cycle
//! containing exactly one NDD: the NDD donates to the first pair and the last
//! pair's donor closes the loop through the dummy arc back to the NDD. The
//! chain limit L counts the pair vertices served; neither the NDD nor the
//! closing dummy arc is a transplant.

use serde::Serialize;
use thiserror::Error;

use crate::instance::{Instance, InstanceError, VertexId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CycleKind {
    PairCycle,
    NddCycle,
}

/// A rotation-canonical cycle: pair cycles start at their minimum vertex id,
/// NDD cycles at their unique NDD. `weight` is the number of pair vertices
/// (the transplant count of choosing the cycle).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    pub vertices: Vec<VertexId>,
    pub kind: CycleKind,
    pub weight: u32,
}

impl Cycle {
    /// Arcs of the cycle in order, closing back to the first vertex.
    pub fn arcs(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    /// The in-arc of `v` within the cycle, i.e. `(predecessor, v)`.
    pub fn in_arc_of(&self, v: VertexId) -> Option<(VertexId, VertexId)> {
        let pos = self.vertices.iter().position(|&u| u == v)?;
        let n = self.vertices.len();
        Some((self.vertices[(pos + n - 1) % n], v))
    }

    /// Canonical rotation of a raw vertex sequence: minimum id first for pair
    /// cycles, the NDD first for chains. Idempotent.
    pub fn canonicalize(vertices: Vec<VertexId>, inst: &Instance) -> Cycle {
        let ndd_pos = vertices.iter().position(|&v| inst.is_ndd(v));
        let start = match ndd_pos {
            Some(p) => p,
            None => {
                let (p, _) = vertices
                    .iter()
                    .enumerate()
                    .min_by_key(|&(_, v)| v)
                    .expect("cycle must be non-empty");
                p
            }
        };
        let mut rotated = Vec::with_capacity(vertices.len());
        rotated.extend_from_slice(&vertices[start..]);
        rotated.extend_from_slice(&vertices[..start]);
        let kind = if ndd_pos.is_some() {
            CycleKind::NddCycle
        } else {
            CycleKind::PairCycle
        };
        let weight = rotated.iter().filter(|&&v| inst.is_pair(v)).count() as u32;
        Cycle {
            vertices: rotated,
            kind,
            weight,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathKind {
    /// Exactly K arcs, all vertices pairs. Eq.-style cycle-length cuts.
    PairPath,
    /// NDD first, then pairs, over non-dummy arcs. Chain-length cuts.
    NddPath,
}

/// A simple path, stored as its ordered arc list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub arcs: Vec<(VertexId, VertexId)>,
    pub kind: PathKind,
}

impl Path {
    pub fn vertices(&self) -> Vec<VertexId> {
        let mut vs = Vec::with_capacity(self.arcs.len() + 1);
        vs.push(self.arcs[0].0);
        for &(_, to) in &self.arcs {
            vs.push(to);
        }
        vs
    }
}

/// Path sets for the edge formulation. `pair_paths` have exactly K arcs among
/// pair vertices; `ndd_paths` have exactly L+1 non-dummy arcs starting at an
/// NDD (one more arc than the longest legal chain, which serves L pairs).
#[derive(Clone, Debug, Default)]
pub struct PathSets {
    pub pair_paths: Vec<Path>,
    pub ndd_paths: Vec<Path>,
}

#[derive(Debug, Error)]
pub enum EnumerateError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),
}

/// Every pair cycle with at most K vertices and every chain serving at most
/// L pairs, each exactly once in canonical rotation, sorted lexicographically
/// by canonical vertex list.
pub fn enumerate_cycles(inst: &Instance) -> Vec<Cycle> {
    let mut out = Vec::new();
    pair_cycles_in_range(inst, 2, inst.k_max() as usize, &mut |vs| {
        out.push(Cycle {
            vertices: vs.to_vec(),
            kind: CycleKind::PairCycle,
            weight: vs.len() as u32,
        });
    });

    // Chains: DFS from each NDD over pair vertices. Every prefix closes into
    // a chain through the dummy arc back to the NDD.
    for ndd in inst.ndds() {
        let mut path = vec![ndd];
        chain_dfs(inst, ndd, &mut path, &mut |vs| {
            out.push(Cycle {
                vertices: vs.to_vec(),
                kind: CycleKind::NddCycle,
                weight: vs.len() as u32 - 1,
            });
        });
    }
    out.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    out
}

fn chain_dfs(
    inst: &Instance,
    ndd: VertexId,
    path: &mut Vec<VertexId>,
    emit: &mut impl FnMut(&[VertexId]),
) {
    if path.len() > 1 {
        debug_assert!(inst.arc(*path.last().unwrap(), ndd).map(|a| a.dummy) == Some(true));
        emit(path);
    }
    if path.len() > inst.l_max() as usize {
        return;
    }
    let last = *path.last().unwrap();
    for &next in inst.out_real_neighbors(last) {
        if inst.is_pair(next) && !path.contains(&next) {
            path.push(next);
            chain_dfs(inst, ndd, path, emit);
            path.pop();
        }
    }
}

/// Visits every pair cycle whose length lies in `min_len..=max_len`, in
/// canonical rotation (minimum id first), lexicographic start order. The
/// standard duplicate-free scheme: extend only to vertices greater than the
/// start.
pub(crate) fn pair_cycles_in_range(
    inst: &Instance,
    min_len: usize,
    max_len: usize,
    emit: &mut impl FnMut(&[VertexId]),
) {
    if max_len < 2 {
        return;
    }
    for start in inst.pairs() {
        let mut path = vec![start];
        pair_cycle_dfs(inst, start, min_len, max_len, &mut path, emit);
    }
}

fn pair_cycle_dfs(
    inst: &Instance,
    start: VertexId,
    min_len: usize,
    max_len: usize,
    path: &mut Vec<VertexId>,
    emit: &mut impl FnMut(&[VertexId]),
) {
    let last = *path.last().unwrap();
    if path.len() >= min_len.max(2) && inst.has_arc(last, start) {
        emit(path);
    }
    if path.len() == max_len {
        return;
    }
    for &next in inst.out_real_neighbors(last) {
        if next > start && inst.is_pair(next) && !path.contains(&next) {
            path.push(next);
            pair_cycle_dfs(inst, start, min_len, max_len, path, emit);
            path.pop();
        }
    }
}

/// Path sets for the edge formulation: all simple pair paths with exactly K
/// arcs, and all simple NDD-rooted paths with exactly L+1 non-dummy arcs.
pub fn enumerate_paths(inst: &Instance) -> PathSets {
    let pair_paths = pair_paths_exact(inst, inst.k_max() as usize)
        .into_iter()
        .map(|vs| Path {
            arcs: to_arcs(&vs),
            kind: PathKind::PairPath,
        })
        .collect();
    let ndd_paths = ndd_rooted_paths_exact(inst, inst.l_max() as usize + 1)
        .into_iter()
        .map(|vs| Path {
            arcs: to_arcs(&vs),
            kind: PathKind::NddPath,
        })
        .collect();
    PathSets {
        pair_paths,
        ndd_paths,
    }
}

fn to_arcs(vs: &[VertexId]) -> Vec<(VertexId, VertexId)> {
    vs.windows(2).map(|w| (w[0], w[1])).collect()
}

/// All simple paths with exactly `arcs` arcs whose vertices are all pairs.
pub(crate) fn pair_paths_exact(inst: &Instance, arcs: usize) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    if arcs == 0 {
        return out;
    }
    for start in inst.pairs() {
        let mut path = vec![start];
        path_dfs(inst, arcs + 1, true, &mut path, &mut out);
    }
    out
}

/// All simple non-dummy paths starting at an NDD with exactly `arcs` arcs,
/// every later vertex a pair.
pub(crate) fn ndd_rooted_paths_exact(inst: &Instance, arcs: usize) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    if arcs == 0 {
        return out;
    }
    for start in inst.ndds() {
        let mut path = vec![start];
        path_dfs(inst, arcs + 1, true, &mut path, &mut out);
    }
    out
}

/// All simple non-dummy paths starting at an NDD with 1..=`max_arcs` arcs.
pub(crate) fn ndd_rooted_paths_up_to(inst: &Instance, max_arcs: usize) -> Vec<Vec<VertexId>> {
    let mut out = Vec::new();
    for start in inst.ndds() {
        let mut path = vec![start];
        path_dfs(inst, max_arcs + 1, false, &mut path, &mut out);
    }
    out
}

fn path_dfs(
    inst: &Instance,
    target_vertices: usize,
    exact: bool,
    path: &mut Vec<VertexId>,
    out: &mut Vec<Vec<VertexId>>,
) {
    if path.len() > 1 && (!exact || path.len() == target_vertices) {
        out.push(path.clone());
    }
    if path.len() == target_vertices {
        return;
    }
    let last = *path.last().unwrap();
    for &next in inst.out_real_neighbors(last) {
        if inst.is_pair(next) && !path.contains(&next) {
            path.push(next);
            path_dfs(inst, target_vertices, exact, path, out);
            path.pop();
        }
    }
}

/// Indices of the cycles whose vertex set contains `v`.
pub fn cycles_through(
    inst: &Instance,
    cycles: &[Cycle],
    v: VertexId,
) -> Result<Vec<usize>, EnumerateError> {
    if v.index() >= inst.n_vertices() {
        return Err(EnumerateError::UnknownVertex(v));
    }
    Ok(cycles
        .iter()
        .enumerate()
        .filter(|(_, c)| c.contains(v))
        .map(|(i, _)| i)
        .collect())
}

/// One cycle per line: `kind:v0,v1,...,vk weight=w`. Debug/golden-test dump.
pub fn dump_cycles(cycles: &[Cycle]) -> String {
    let mut s = String::new();
    for c in cycles {
        let kind = match c.kind {
            CycleKind::PairCycle => "pair",
            CycleKind::NddCycle => "ndd",
        };
        let vs: Vec<String> = c.vertices.iter().map(|v| v.to_string()).collect();
        s.push_str(&format!("{kind}:{} weight={}\n", vs.join(","), c.weight));
    }
    s
}
