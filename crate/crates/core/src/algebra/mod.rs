//! Combinatorics of symmetric and asymmetric Byzantine quorum systems.
//!
//! Everything here is a pure function over immutable values. Process sets
//! are 64-bit masks, so universes are capped at 64 processes; the hitting-set
//! enumerations are exponential and meant for desk-scale systems.

mod conditions;
mod family;
mod hitting;
mod process;
mod trust;

#[cfg(test)]
pub(crate) mod fixtures;

pub use conditions::{
    canonical_asymmetric, canonical_quorums, check_b3, check_q3, is_asym_bqs, is_bqs,
    AsymBqsViolation, B3Violation,
};
pub use family::{
    dominates, downward_closure_contains, normalize_antichain, star, theta, AsymmetricFamily,
    SetFamily,
};
pub use hitting::{core_sets, kernels};
pub use process::{ProcessId, ProcessIter, ProcessSet, MAX_PROCESSES};
pub use trust::{
    classify, is_guild, maximal_guild, threshold_asym, threshold_kernel_size,
    threshold_quorum_size, Classification, Label,
};
