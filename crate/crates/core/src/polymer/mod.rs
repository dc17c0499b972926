//! Partition functions of the polymer and the path diagnostics built on them.
//!
//! `log Z_n` is computed by a log-domain transfer-matrix recursion over
//! finite windows. Truncation (a maximal jump radius and per-slice windows)
//! is accounted for by a certified bound on the lost mass.

mod deform;
mod dp;
mod path;
mod sample;
mod tilted;

pub use deform::{auxiliary_hamiltonian, deform_path, deformation_cost_check, open_distances};
pub use dp::{
    flip_identity_check, log_partition, log_partition_with, JumpRadius, LogWeightSlice, PartitionResult,
    Resolved, TruncationPolicy, WindowPolicy,
};
pub use path::{hamiltonian, Coordinate, LatticePath, PathRecord, PointPath, Provenance};
pub use sample::{sample_polymer_path, SampleMemory};
pub use tilted::{log_budgeted_partition, log_tilted_partition, BudgetRounding};

/// Default cap on nearest-open-site searches.
pub const DEFAULT_SEARCH_CAP: u64 = 1 << 12;
