//! Compatibility graph instances: vertices, ranked arcs, random pool
//! generation and JSON file I/O.
//!
//! An instance is a digraph over patient-donor pairs and non-directed donors
//! (NDDs). An arc `(i, j)` means the donor of `i` can donate to the patient
//! of `j`; every arc carries a rank (1 = most preferred by the patient of
//! `j`). Each NDD has a "dummy patient" that receives a dummy arc from every
//! pair; a chain closes through one of these arcs.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense vertex identifier, `0..n-1` within an instance.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VertexKind {
    Pair,
    Ndd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PreferenceMode {
    /// All ranks into a vertex are pairwise distinct.
    Strict,
    /// Ranks into a vertex may repeat (ties).
    Weak,
}

/// A compatibility arc. `rank` is the position of the source in the target
/// patient's preference order (1 = best). `dummy` marks the bookkeeping arcs
/// from pairs into NDDs that close chains; they are not transplants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub from: VertexId,
    pub to: VertexId,
    pub rank: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    pub dummy: bool,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("instance must have dense vertex ids 0..n-1, found id {0}")]
    NonDenseIds(VertexId),
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(VertexId),
    #[error("cycle length limit K must be at least 2, got {0}")]
    BadCycleLimit(u32),
    #[error("chain length limit L must be at least 1, got {0}")]
    BadChainLimit(u32),
    #[error("number of pairs must be at least 1")]
    EmptyPool,
    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),
    #[error("arc ({0}, {1}): self loop")]
    SelfLoop(VertexId, VertexId),
    #[error("duplicate arc ({0}, {1})")]
    DuplicateArc(VertexId, VertexId),
    #[error("arc ({0}, {1}): rank {2} outside 1..={3} (in-degree of target)")]
    BadRank(VertexId, VertexId, u32, usize),
    #[error("arc ({0}, {1}): target is an NDD but arc is not marked dummy")]
    NonDummyIntoNdd(VertexId, VertexId),
    #[error("arc ({0}, {1}): marked dummy but target is not an NDD")]
    DummyNotIntoNdd(VertexId, VertexId),
    #[error("arc ({0}, {1}): arcs between NDDs are not allowed")]
    NddToNdd(VertexId, VertexId),
    #[error("missing dummy arc from pair {0} to NDD {1}")]
    MissingDummyArc(VertexId, VertexId),
    #[error("strict preferences but arcs ({0}, {2}) and ({1}, {2}) share rank {3}")]
    StrictRankCollision(VertexId, VertexId, VertexId, u32),
    #[error("no arc ({0}, {1}) in instance")]
    MissingArc(VertexId, VertexId),
    #[error("generator config invalid: {0}")]
    BadGeneratorConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Distributions used by the random pool generator. Blood type order is
/// O, A, B, AB.
#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub blood_probs: [f64; 4],
    /// `(PRA level, probability)` for patient sensitization.
    pub pra_levels: Vec<(f64, f64)>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            blood_probs: [0.44, 0.42, 0.10, 0.04],
            pra_levels: vec![(0.05, 0.70), (0.45, 0.20), (0.90, 0.10)],
        }
    }
}

impl GeneratorConfig {
    fn validate(&self) -> Result<(), InstanceError> {
        let sum: f64 = self.blood_probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(InstanceError::BadGeneratorConfig(format!(
                "blood type probabilities sum to {sum}, expected 1"
            )));
        }
        let sum: f64 = self.pra_levels.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(InstanceError::BadGeneratorConfig(format!(
                "PRA probabilities sum to {sum}, expected 1"
            )));
        }
        if self.pra_levels.iter().any(|&(l, _)| !(0.0..=1.0).contains(&l)) {
            return Err(InstanceError::BadGeneratorConfig(
                "PRA levels must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Blood {
    O,
    A,
    B,
    Ab,
}

impl Blood {
    /// ABO compatibility of a donation from `donor` to `patient`.
    fn donates_to(self, patient: Blood) -> bool {
        match self {
            Blood::O => true,
            Blood::A => matches!(patient, Blood::A | Blood::Ab),
            Blood::B => matches!(patient, Blood::B | Blood::Ab),
            Blood::Ab => patient == Blood::Ab,
        }
    }
}

/// Immutable compatibility graph. Vertices and arcs are kept in canonical
/// order (vertices by id, arcs by `(from, to)`), so serialization is
/// deterministic.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    kinds: Vec<VertexKind>,
    arcs: Vec<Arc>,
    /// Per vertex: in-neighbors as `(source, rank)`, sorted by (rank, id).
    in_arcs: Vec<Vec<(VertexId, u32)>>,
    /// Per vertex: all out-neighbors, ascending.
    out_arcs: Vec<Vec<VertexId>>,
    /// Per vertex: out-neighbors over non-dummy arcs only, ascending.
    out_real: Vec<Vec<VertexId>>,
    k_max: u32,
    l_max: u32,
    mode: PreferenceMode,
}

#[derive(Serialize, Deserialize)]
struct VertexRecord {
    id: VertexId,
    kind: VertexKind,
}

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    #[serde(rename = "K")]
    k: u32,
    #[serde(rename = "L")]
    l: u32,
    mode: PreferenceMode,
    vertices: Vec<VertexRecord>,
    arcs: Vec<Arc>,
}

impl Instance {
    /// Builds and validates an instance. Vertices and arcs may arrive in any
    /// order; they are canonicalized here.
    pub fn new(
        vertices: Vec<(VertexId, VertexKind)>,
        arcs: Vec<Arc>,
        k_max: u32,
        l_max: u32,
        mode: PreferenceMode,
    ) -> Result<Instance, InstanceError> {
        if k_max < 2 {
            return Err(InstanceError::BadCycleLimit(k_max));
        }
        if l_max < 1 {
            return Err(InstanceError::BadChainLimit(l_max));
        }
        let n = vertices.len();
        let mut kinds = vec![None; n];
        for (id, kind) in vertices {
            if id.index() >= n {
                return Err(InstanceError::NonDenseIds(id));
            }
            if kinds[id.index()].is_some() {
                return Err(InstanceError::DuplicateVertex(id));
            }
            kinds[id.index()] = Some(kind);
        }
        let kinds: Vec<VertexKind> = kinds.into_iter().map(|k| k.unwrap()).collect();

        let mut arcs = arcs;
        arcs.sort_by_key(|a| (a.from, a.to));
        for w in arcs.windows(2) {
            if w[0].from == w[1].from && w[0].to == w[1].to {
                return Err(InstanceError::DuplicateArc(w[0].from, w[0].to));
            }
        }

        let valid = |v: VertexId| -> Result<(), InstanceError> {
            if v.index() >= n {
                Err(InstanceError::UnknownVertex(v))
            } else {
                Ok(())
            }
        };
        for a in &arcs {
            valid(a.from)?;
            valid(a.to)?;
            if a.from == a.to {
                return Err(InstanceError::SelfLoop(a.from, a.to));
            }
            let from_ndd = kinds[a.from.index()] == VertexKind::Ndd;
            let to_ndd = kinds[a.to.index()] == VertexKind::Ndd;
            if from_ndd && to_ndd {
                return Err(InstanceError::NddToNdd(a.from, a.to));
            }
            if to_ndd && !a.dummy {
                return Err(InstanceError::NonDummyIntoNdd(a.from, a.to));
            }
            if !to_ndd && a.dummy {
                return Err(InstanceError::DummyNotIntoNdd(a.from, a.to));
            }
        }

        // Dummy arcs exist from every pair to every NDD.
        let ndds: Vec<VertexId> = (0..n as u32)
            .map(VertexId)
            .filter(|v| kinds[v.index()] == VertexKind::Ndd)
            .collect();
        if !ndds.is_empty() {
            for p in 0..n as u32 {
                let p = VertexId(p);
                if kinds[p.index()] != VertexKind::Pair {
                    continue;
                }
                for &nd in &ndds {
                    if arcs
                        .binary_search_by_key(&(p, nd), |a| (a.from, a.to))
                        .is_err()
                    {
                        return Err(InstanceError::MissingDummyArc(p, nd));
                    }
                }
            }
        }

        let mut in_arcs: Vec<Vec<(VertexId, u32)>> = vec![Vec::new(); n];
        let mut out_arcs: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        let mut out_real: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        for a in &arcs {
            in_arcs[a.to.index()].push((a.from, a.rank));
            out_arcs[a.from.index()].push(a.to);
            if !a.dummy {
                out_real[a.from.index()].push(a.to);
            }
        }
        for (v, list) in in_arcs.iter_mut().enumerate() {
            let deg = list.len();
            for &(src, rank) in list.iter() {
                if rank == 0 || rank as usize > deg {
                    return Err(InstanceError::BadRank(src, VertexId(v as u32), rank, deg));
                }
            }
            if mode == PreferenceMode::Strict {
                let mut by_rank = list.clone();
                by_rank.sort_by_key(|&(src, rank)| (rank, src));
                for w in by_rank.windows(2) {
                    if w[0].1 == w[1].1 {
                        return Err(InstanceError::StrictRankCollision(
                            w[0].0,
                            w[1].0,
                            VertexId(v as u32),
                            w[0].1,
                        ));
                    }
                }
            }
            list.sort_by_key(|&(src, rank)| (rank, src));
        }

        Ok(Instance {
            kinds,
            arcs,
            in_arcs,
            out_arcs,
            out_real,
            k_max,
            l_max,
            mode,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, v: VertexId) -> VertexKind {
        self.kinds[v.index()]
    }

    pub fn is_pair(&self, v: VertexId) -> bool {
        self.kind(v) == VertexKind::Pair
    }

    pub fn is_ndd(&self, v: VertexId) -> bool {
        self.kind(v) == VertexKind::Ndd
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.kinds.len() as u32).map(VertexId)
    }

    pub fn pairs(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.is_pair(v))
    }

    pub fn ndds(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.is_ndd(v))
    }

    pub fn num_pairs(&self) -> usize {
        self.kinds.iter().filter(|&&k| k == VertexKind::Pair).count()
    }

    pub fn num_ndds(&self) -> usize {
        self.kinds.iter().filter(|&&k| k == VertexKind::Ndd).count()
    }

    /// All arcs in canonical `(from, to)` order.
    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    pub fn mode(&self) -> PreferenceMode {
        self.mode
    }

    pub fn arc(&self, from: VertexId, to: VertexId) -> Option<&Arc> {
        self.arcs
            .binary_search_by_key(&(from, to), |a| (a.from, a.to))
            .ok()
            .map(|i| &self.arcs[i])
    }

    pub fn has_arc(&self, from: VertexId, to: VertexId) -> bool {
        self.arc(from, to).is_some()
    }

    /// Rank of `from` in the preference order of `to`'s patient.
    pub fn rank(&self, from: VertexId, to: VertexId) -> Result<u32, InstanceError> {
        self.arc(from, to)
            .map(|a| a.rank)
            .ok_or(InstanceError::MissingArc(from, to))
    }

    /// In-neighborhood of `v` as `(source, rank)`, sorted by (rank, id).
    pub fn in_neighbors(&self, v: VertexId) -> Result<&[(VertexId, u32)], InstanceError> {
        self.in_arcs
            .get(v.index())
            .map(|l| l.as_slice())
            .ok_or(InstanceError::UnknownVertex(v))
    }

    /// Out-neighborhood of `v` over all arcs, ascending.
    pub fn out_neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.out_arcs[v.index()]
    }

    /// Out-neighborhood of `v` over non-dummy arcs, ascending.
    pub fn out_real_neighbors(&self, v: VertexId) -> &[VertexId] {
        &self.out_real[v.index()]
    }

    /// Same graph with different cycle/chain limits. Generation does not
    /// depend on the limits, so this is how K-sweeps reuse one pool.
    pub fn with_limits(&self, k_max: u32, l_max: u32) -> Result<Instance, InstanceError> {
        if k_max < 2 {
            return Err(InstanceError::BadCycleLimit(k_max));
        }
        if l_max < 1 {
            return Err(InstanceError::BadChainLimit(l_max));
        }
        let mut inst = self.clone();
        inst.k_max = k_max;
        inst.l_max = l_max;
        Ok(inst)
    }

    /// Generates a random pool with the default distributions.
    ///
    /// Deterministic in its arguments: `|N| = ceil(5% |P|)` NDDs are appended
    /// after the pairs, pairs are admitted only if internally incompatible,
    /// and every arc gets an independent uniform weight in (0,1) from which
    /// ranks are derived (descending weight; under weak preferences weights
    /// within the same 0.1-interval tie).
    pub fn generate(
        num_pairs: u32,
        seed: u64,
        mode: PreferenceMode,
        k_max: u32,
        l_max: u32,
    ) -> Result<Instance, InstanceError> {
        Instance::generate_with(&GeneratorConfig::default(), num_pairs, seed, mode, k_max, l_max)
    }

    pub fn generate_with(
        config: &GeneratorConfig,
        num_pairs: u32,
        seed: u64,
        mode: PreferenceMode,
        k_max: u32,
        l_max: u32,
    ) -> Result<Instance, InstanceError> {
        if num_pairs == 0 {
            return Err(InstanceError::EmptyPool);
        }
        if k_max < 2 {
            return Err(InstanceError::BadCycleLimit(k_max));
        }
        if l_max < 1 {
            return Err(InstanceError::BadChainLimit(l_max));
        }
        config.validate()?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let num_ndds = (num_pairs as usize + 19) / 20; // ceil(0.05 * |P|), exact

        // Patient/donor characteristics. A candidate pair enters the pool
        // only if the donor cannot donate to the own patient (ABO mismatch or
        // positive crossmatch).
        let mut patients: Vec<(Blood, f64)> = Vec::with_capacity(num_pairs as usize);
        let mut donors: Vec<Blood> = Vec::with_capacity(num_pairs as usize);
        while patients.len() < num_pairs as usize {
            let pb = sample_blood(&mut rng, &config.blood_probs);
            let pra = sample_pra(&mut rng, &config.pra_levels);
            let db = sample_blood(&mut rng, &config.blood_probs);
            let crossmatch_ok = rng.gen::<f64>() < 1.0 - pra;
            if db.donates_to(pb) && crossmatch_ok {
                continue; // internally compatible, not a KEP candidate
            }
            patients.push((pb, pra));
            donors.push(db);
        }
        let ndd_donors: Vec<Blood> = (0..num_ndds)
            .map(|_| sample_blood(&mut rng, &config.blood_probs))
            .collect();

        let n = num_pairs as usize + num_ndds;
        let kind_of = |v: usize| {
            if v < num_pairs as usize {
                VertexKind::Pair
            } else {
                VertexKind::Ndd
            }
        };
        let donor_of = |v: usize| {
            if v < num_pairs as usize {
                donors[v]
            } else {
                ndd_donors[v - num_pairs as usize]
            }
        };

        // One deterministic pass in (from, to) order. Dummy arcs from every
        // pair to every NDD always exist; their weights rank the chain-closing
        // donors for the NDD's dummy patient.
        let mut raw: Vec<(VertexId, VertexId, f64, bool)> = Vec::new();
        for from in 0..n {
            for to in 0..n {
                if from == to {
                    continue;
                }
                match (kind_of(from), kind_of(to)) {
                    (VertexKind::Ndd, VertexKind::Ndd) => {}
                    (VertexKind::Pair, VertexKind::Ndd) => {
                        let w = open_unit(&mut rng);
                        raw.push((VertexId(from as u32), VertexId(to as u32), w, true));
                    }
                    (_, VertexKind::Pair) => {
                        let (pb, pra) = patients[to];
                        if donor_of(from).donates_to(pb) {
                            let crossmatch_ok = rng.gen::<f64>() < 1.0 - pra;
                            if crossmatch_ok {
                                let w = open_unit(&mut rng);
                                raw.push((
                                    VertexId(from as u32),
                                    VertexId(to as u32),
                                    w,
                                    false,
                                ));
                            }
                        }
                    }
                }
            }
        }

        let arcs = assign_ranks(n, &raw, mode);
        let vertices = (0..n as u32)
            .map(|v| (VertexId(v), kind_of(v as usize)))
            .collect();
        Instance::new(vertices, arcs, k_max, l_max, mode)
    }

    pub fn to_json_string(&self) -> String {
        let file = InstanceFile {
            k: self.k_max,
            l: self.l_max,
            mode: self.mode,
            vertices: self
                .vertices()
                .map(|v| VertexRecord {
                    id: v,
                    kind: self.kind(v),
                })
                .collect(),
            arcs: self.arcs.clone(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("instance serialization");
        s.push('\n');
        s
    }

    pub fn from_json_str(s: &str) -> Result<Instance, InstanceError> {
        let file: InstanceFile =
            serde_json::from_str(s).map_err(|e| InstanceError::Parse(e.to_string()))?;
        Instance::new(
            file.vertices.into_iter().map(|r| (r.id, r.kind)).collect(),
            file.arcs,
            file.k,
            file.l,
            file.mode,
        )
    }

    pub fn save(&self, path: &Path) -> Result<(), InstanceError> {
        fs::write(path, self.to_json_string()).map_err(|e| InstanceError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Instance, InstanceError> {
        let s = fs::read_to_string(path).map_err(|e| InstanceError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Instance::from_json_str(&s)
    }
}

fn sample_blood(rng: &mut ChaCha8Rng, probs: &[f64; 4]) -> Blood {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return [Blood::O, Blood::A, Blood::B, Blood::Ab][i];
        }
    }
    Blood::Ab
}

fn sample_pra(rng: &mut ChaCha8Rng, levels: &[(f64, f64)]) -> f64 {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    for &(level, p) in levels {
        acc += p;
        if u < acc {
            return level;
        }
    }
    levels.last().map(|&(l, _)| l).unwrap_or(0.0)
}

/// Uniform draw from the open interval (0, 1).
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let x: f64 = rng.gen();
        if x != 0.0 {
            return x;
        }
    }
}

/// Weight bucket for weak preferences: the partition
/// `(0, 0.1], (0.1, 0.2], ..., (0.9, 1.0)` numbered 1..=10.
fn weight_bucket(w: f64) -> u32 {
    ((w * 10.0).ceil() as u32).clamp(1, 10)
}

/// Turns raw weighted arcs into ranked arcs. Higher weight is better. Under
/// weak preferences, arcs whose weights fall in the same 0.1-interval tie;
/// bucket indices are renumbered densely per vertex so ranks are
/// `1..=#distinct buckets`. Under strict preferences ranks follow descending
/// weight with ties broken by smaller source id.
fn assign_ranks(
    n: usize,
    raw: &[(VertexId, VertexId, f64, bool)],
    mode: PreferenceMode,
) -> Vec<Arc> {
    let mut per_target: Vec<Vec<(VertexId, f64, bool)>> = vec![Vec::new(); n];
    for &(from, to, w, dummy) in raw {
        per_target[to.index()].push((from, w, dummy));
    }
    let mut arcs = Vec::with_capacity(raw.len());
    for (to, list) in per_target.into_iter().enumerate() {
        let to = VertexId(to as u32);
        match mode {
            PreferenceMode::Weak => {
                let mut buckets: Vec<u32> = list.iter().map(|&(_, w, _)| weight_bucket(w)).collect();
                let mut distinct = buckets.clone();
                distinct.sort_unstable();
                distinct.dedup();
                // Highest bucket first -> rank 1.
                distinct.reverse();
                buckets = buckets
                    .iter()
                    .map(|b| distinct.iter().position(|d| d == b).unwrap() as u32 + 1)
                    .collect();
                for ((from, w, dummy), rank) in list.into_iter().zip(buckets) {
                    arcs.push(Arc {
                        from,
                        to,
                        rank,
                        weight: Some(w),
                        dummy,
                    });
                }
            }
            PreferenceMode::Strict => {
                let mut order: Vec<usize> = (0..list.len()).collect();
                order.sort_by(|&a, &b| {
                    list[b].1.total_cmp(&list[a].1).then(list[a].0.cmp(&list[b].0))
                });
                let mut ranks = vec![0u32; list.len()];
                for (pos, &idx) in order.iter().enumerate() {
                    ranks[idx] = pos as u32 + 1;
                }
                for ((from, w, dummy), rank) in list.into_iter().zip(ranks) {
                    arcs.push(Arc {
                        from,
                        to,
                        rank,
                        weight: Some(w),
                        dummy,
                    });
                }
            }
        }
    }
    arcs
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The vertex/arc shorthand used across the test suite: pairs 0..n,
    /// arcs as (from, to, rank).
    pub(crate) fn pairs_instance(
        n: u32,
        arcs: &[(u32, u32, u32)],
        k: u32,
        l: u32,
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
        Instance::new(vs, arcs, k, l, mode).unwrap()
    }

    /// Preference/indifference example: a, b, c, d all point at j with
    /// ranks 1, 2, 2, 3 (ties, so weak mode). Ids: a=0, b=1, c=2, d=3, j=4.
    fn fan_instance() -> Instance {
        pairs_instance(
            5,
            &[(0, 4, 1), (1, 4, 2), (2, 4, 2), (3, 4, 3)],
            2,
            1,
            PreferenceMode::Weak,
        )
    }

    #[test]
    fn ndd_count_matches_pool_size() {
        let inst = Instance::generate(20, 7, PreferenceMode::Strict, 2, 2).unwrap();
        assert_eq!(inst.num_pairs(), 20);
        assert_eq!(inst.num_ndds(), 1);
        let inst = Instance::generate(30, 7, PreferenceMode::Strict, 2, 2).unwrap();
        assert_eq!(inst.num_ndds(), 2);
        let inst = Instance::generate(41, 7, PreferenceMode::Strict, 2, 2).unwrap();
        assert_eq!(inst.num_ndds(), 3);
        let inst = Instance::generate(1, 7, PreferenceMode::Strict, 2, 2).unwrap();
        assert_eq!(inst.num_ndds(), 1);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = Instance::generate(25, 42, PreferenceMode::Weak, 3, 3).unwrap();
        let b = Instance::generate(25, 42, PreferenceMode::Weak, 3, 3).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        let c = Instance::generate(25, 43, PreferenceMode::Weak, 3, 3).unwrap();
        assert_ne!(a.to_json_string(), c.to_json_string());
    }

    #[test]
    fn generation_rejects_degenerate_arguments() {
        assert!(matches!(
            Instance::generate(0, 1, PreferenceMode::Strict, 2, 2),
            Err(InstanceError::EmptyPool)
        ));
        assert!(matches!(
            Instance::generate(5, 1, PreferenceMode::Strict, 1, 2),
            Err(InstanceError::BadCycleLimit(1))
        ));
        assert!(matches!(
            Instance::generate(5, 1, PreferenceMode::Strict, 2, 0),
            Err(InstanceError::BadChainLimit(0))
        ));
    }

    #[test]
    fn strict_ranks_are_dense_per_vertex() {
        let inst = Instance::generate(30, 3, PreferenceMode::Strict, 2, 2).unwrap();
        for v in inst.vertices() {
            let ranks: Vec<u32> = inst.in_neighbors(v).unwrap().iter().map(|&(_, r)| r).collect();
            let mut sorted = ranks.clone();
            sorted.sort_unstable();
            let expect: Vec<u32> = (1..=ranks.len() as u32).collect();
            assert_eq!(sorted, expect, "vertex {v}");
        }
    }

    #[test]
    fn weak_ranks_follow_weight_buckets() {
        let inst = Instance::generate(30, 11, PreferenceMode::Weak, 2, 2).unwrap();
        for v in inst.vertices() {
            let arcs: Vec<&Arc> = inst.arcs().iter().filter(|a| a.to == v).collect();
            for a in &arcs {
                for b in &arcs {
                    let ba = weight_bucket(a.weight.unwrap());
                    let bb = weight_bucket(b.weight.unwrap());
                    if ba == bb {
                        assert_eq!(a.rank, b.rank);
                    } else if ba > bb {
                        assert!(a.rank < b.rank, "higher bucket must rank better");
                    }
                }
            }
            // Dense 1..=#distinct buckets.
            let mut ranks: Vec<u32> = arcs.iter().map(|a| a.rank).collect();
            ranks.sort_unstable();
            ranks.dedup();
            let expect: Vec<u32> = (1..=ranks.len() as u32).collect();
            assert_eq!(ranks, expect);
        }
    }

    #[test]
    fn dummy_arcs_exactly_pair_to_every_ndd() {
        let inst = Instance::generate(25, 5, PreferenceMode::Strict, 2, 2).unwrap();
        let ndds: Vec<VertexId> = inst.ndds().collect();
        assert_eq!(ndds.len(), 2);
        for a in inst.arcs() {
            if a.dummy {
                assert!(inst.is_pair(a.from) && inst.is_ndd(a.to));
            } else {
                assert!(inst.is_pair(a.to));
            }
        }
        for p in inst.pairs() {
            for &nd in &ndds {
                assert!(inst.arc(p, nd).map(|a| a.dummy).unwrap_or(false));
            }
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.json");
        let inst = Instance::generate(12, 9, PreferenceMode::Weak, 3, 2).unwrap();
        inst.save(&path).unwrap();
        let back = Instance::load(&path).unwrap();
        assert_eq!(inst, back);
        // Canonical form is stable across a save/load cycle.
        assert_eq!(inst.to_json_string(), back.to_json_string());
    }

    #[test]
    fn load_rejects_rank_zero() {
        let json = r#"{
            "K": 2, "L": 1, "mode": "strict",
            "vertices": [{"id": 0, "kind": "pair"}, {"id": 1, "kind": "pair"}],
            "arcs": [{"from": 0, "to": 1, "rank": 0, "dummy": false}]
        }"#;
        assert!(matches!(
            Instance::from_json_str(json),
            Err(InstanceError::BadRank(_, _, 0, _))
        ));
    }

    #[test]
    fn load_rejects_non_dummy_arc_into_ndd() {
        let json = r#"{
            "K": 2, "L": 1, "mode": "strict",
            "vertices": [{"id": 0, "kind": "pair"}, {"id": 1, "kind": "ndd"}],
            "arcs": [{"from": 0, "to": 1, "rank": 1, "dummy": false}]
        }"#;
        assert!(matches!(
            Instance::from_json_str(json),
            Err(InstanceError::NonDummyIntoNdd(_, _))
        ));
    }

    #[test]
    fn load_reports_parse_errors() {
        let err = Instance::from_json_str("{ not json").unwrap_err();
        assert!(matches!(err, InstanceError::Parse(_)));
    }

    #[test]
    fn in_neighbors_sorted_by_rank_then_id() {
        let inst = fan_instance();
        let j = VertexId(4);
        let got = inst.in_neighbors(j).unwrap();
        assert_eq!(
            got,
            &[
                (VertexId(0), 1),
                (VertexId(1), 2),
                (VertexId(2), 2),
                (VertexId(3), 3)
            ]
        );
        // Isolated vertex.
        assert!(inst.in_neighbors(VertexId(0)).unwrap().is_empty());
    }

    #[test]
    fn in_neighbors_two_cycle() {
        let inst = pairs_instance(2, &[(0, 1, 1), (1, 0, 1)], 2, 1, PreferenceMode::Strict);
        assert_eq!(inst.in_neighbors(VertexId(0)).unwrap(), &[(VertexId(1), 1)]);
    }

    #[test]
    fn rejects_duplicate_and_self_arcs() {
        let vs = vec![
            (VertexId(0), VertexKind::Pair),
            (VertexId(1), VertexKind::Pair),
        ];
        let dup = vec![
            Arc { from: VertexId(0), to: VertexId(1), rank: 1, weight: None, dummy: false },
            Arc { from: VertexId(0), to: VertexId(1), rank: 1, weight: None, dummy: false },
        ];
        assert!(matches!(
            Instance::new(vs.clone(), dup, 2, 1, PreferenceMode::Weak),
            Err(InstanceError::DuplicateArc(_, _))
        ));
        let selfloop = vec![Arc {
            from: VertexId(0),
            to: VertexId(0),
            rank: 1,
            weight: None,
            dummy: false,
        }];
        assert!(matches!(
            Instance::new(vs, selfloop, 2, 1, PreferenceMode::Weak),
            Err(InstanceError::SelfLoop(_, _))
        ));
    }

    #[test]
    fn strict_mode_rejects_tied_ranks() {
        let vs = (0..3).map(|v| (VertexId(v), VertexKind::Pair)).collect();
        let arcs = vec![
            Arc { from: VertexId(0), to: VertexId(2), rank: 1, weight: None, dummy: false },
            Arc { from: VertexId(1), to: VertexId(2), rank: 1, weight: None, dummy: false },
        ];
        assert!(matches!(
            Instance::new(vs, arcs, 2, 1, PreferenceMode::Strict),
            Err(InstanceError::StrictRankCollision(_, _, _, 1))
        ));
    }

    #[test]
    fn limits_do_not_affect_generation() {
        let a = Instance::generate(15, 4, PreferenceMode::Strict, 2, 2).unwrap();
        let b = Instance::generate(15, 4, PreferenceMode::Strict, 4, 3).unwrap();
        assert_eq!(a.arcs(), b.arcs());
        assert_eq!(a.with_limits(4, 3).unwrap(), b);
    }
}
