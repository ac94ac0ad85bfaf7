//! Stable kidney exchange optimization toolkit.
//!
//! A kidney exchange pool is a digraph whose vertices are incompatible
//! patient-donor pairs and non-directed donors (NDDs), and whose arcs are
//! donor-to-patient compatibilities ranked by patient preference. This crate
//! finds maximum-cardinality stable and strongly stable exchanges (sets of
//! vertex-disjoint cycles and chains) via three integer programming
//! formulations, and studies the trade-off between cardinality and the number
//! of blocking cycles when stability is relaxed.
//!
//! Modules:
//! - [`instance`]: compatibility graph, ranked arcs, random pool generation, JSON I/O
//! - [`enumerate`]: bounded cycle, chain and path enumeration
//! - [`prefs`]: preference relations over vertices and cycles
//! - [`stability`]: exchange feasibility and blocking-cycle verification
//! - [`milp`]: solver-agnostic model IR, LP file I/O, exact branch-and-bound
//! - [`formulations`]: EF / CF / CEF model builders, the relaxed model, decoding
//! - [`oracle`]: brute-force ground truth for tiny instances

pub mod enumerate;
pub mod formulations;
pub mod instance;
pub mod milp;
pub mod oracle;
pub mod plot;
pub mod prefs;
pub mod stability;

pub use instance::{Arc, Instance, PreferenceMode, VertexId, VertexKind};
pub use stability::{Exchange, StabilityReport};
