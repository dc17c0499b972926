//! Directed first-passage percolation through a space-time point process:
//! `T_n = min sum_k |x_{k-1} - x_k|_1^alpha` over paths from the origin with
//! `x_k` a point of slice `k`.

mod compare;
mod estimate;
mod face;
mod minplus;
mod passage;
mod regularize;

pub use compare::{comparison_check, comparison_residuals, comparison_slacks, elementary_inequality, ComparisonResult};
pub use estimate::{
    concentration_tail, estimate_with, sample_passage_times, time_constant_estimate, ProcessKind, TailRow, TimeConstantEstimate,
    MAX_INFEASIBLE_RATE,
};
pub use face::{face_to_face, face_to_face_in, is_epsilon_good, j_functional, FaceToFaceParams, GoodnessCheck, JParams};
pub use passage::{greedy_passage, passage_time, passage_time_auto, reach_bound, PassageResult};
pub use regularize::{regularize, uniform_bound, Regularized};

/// Largest search radius used when looking for a nearest point.
pub const DEFAULT_MAX_SEARCH: f64 = 1e6;
