//! Tolerance policy shared across the crate.
//!
//! Inputs are assumed well scaled (entries within a few orders of magnitude of
//! unity after the problem's natural nondimensionalization), which is what the
//! generators produce and the file formats round-trip.

/// Relative rank tolerance: an eigenvalue or singular value counts toward the
/// rank when it exceeds `REL_RANK * lambda_max`.
pub const REL_RANK: f64 = 1e-10;

/// Relative pivot threshold for sparse factorizations: pivots below
/// `PIVOT_REL * max_diagonal` are treated as zero.
pub const PIVOT_REL: f64 = 1e-12;

/// Relative tolerance for the pencil range-compatibility check
/// `||A - P_B A P_B|| <= RANGE_MISMATCH * ||A||`.
pub const RANGE_MISMATCH: f64 = 1e-8;

/// Leverages are clamped into `[TAU_FLOOR, 1]` so sampling probabilities stay
/// strictly positive and roundoff above one is removed.
pub const TAU_FLOOR: f64 = 1e-14;

/// Relative residual bound for the pseudoinverse-apply consistency check.
pub const CONSISTENCY: f64 = 1e-6;

/// Guard used in place of `lambda_max` when a matrix is identically zero.
pub const EIG_FLOOR: f64 = f64::EPSILON;
