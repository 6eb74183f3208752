//! Error type shared by all modules.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong below the IO layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument was outside its documented domain.
    Domain(&'static str),
    /// The symmetric eigensolver did not converge within its sweep budget.
    EigNonConvergence { order: usize },
    /// A pencil `(A, B)` was handed matrices whose null spaces differ beyond
    /// tolerance (rank mismatch after projection, or range mismatch).
    NullSpaceMismatch { detail: &'static str },
    /// A factorization hit a non-positive pivot where the input had to be
    /// strictly positive definite. Carries the pivot index in the
    /// factorization's own ordering.
    NotWellFormed { pivot: usize },
    /// A matrix expected to be positive semidefinite produced a negative
    /// pivot beyond tolerance.
    Indefinite { pivot: usize, value: f64 },
    /// A model-level violation: bad node indices, missing factors, an element
    /// whose rank disagrees with the assembly's declared rank, and the like.
    Model { element: Option<usize>, reason: String },
    /// The right-hand side is too far from the operator's range.
    Consistency { residual: f64 },
    /// An inner-product breakdown inside an iteration.
    Breakdown(&'static str),
    /// The sampled preconditioner's null space does not match the model's.
    PreconditionerNull,
    /// A desk-scale-only operation was called beyond its size gate.
    SizeGate { limit: usize, got: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "argument out of domain: {what}"),
            Error::EigNonConvergence { order } => {
                write!(f, "symmetric eigensolver failed to converge on a matrix of order {order}")
            }
            Error::NullSpaceMismatch { detail } => {
                write!(f, "pencil matrices have mismatched null spaces: {detail}")
            }
            Error::NotWellFormed { pivot } => {
                write!(f, "factorization broke down at pivot {pivot}; matrix is not well-formed")
            }
            Error::Indefinite { pivot, value } => {
                write!(f, "negative pivot {value:e} at index {pivot}; matrix is not positive semidefinite")
            }
            Error::Model { element, reason } => match element {
                Some(e) => write!(f, "model error in element {e}: {reason}"),
                None => write!(f, "model error: {reason}"),
            },
            Error::Consistency { residual } => {
                write!(f, "right-hand side is not in the operator's range (relative residual {residual:e})")
            }
            Error::Breakdown(what) => write!(f, "iteration breakdown: {what}"),
            Error::PreconditionerNull => {
                write!(f, "sampled preconditioner's null space differs from the model's")
            }
            Error::SizeGate { limit, got } => {
                write!(f, "operation is gated to order {limit}, got {got}")
            }
        }
    }
}

impl core::error::Error for Error {}
