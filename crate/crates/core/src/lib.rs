//! Element-leverage sparsification of finite-element stiffness matrices.
//!
//! A stiffness matrix `K = Σ K_e` built from symmetric PSD element matrices can
//! be sparsified by sampling elements with replacement, where the probability of
//! an element is proportional to its *leverage*: the largest generalized
//! eigenvalue of the essential element matrix against the element's effective
//! stiffness (the Schur complement of `K` onto the element's indices). The
//! sampled, reweighted sum is with high probability spectrally close to `K`
//! and serves as a preconditioner for conjugate gradients.
//!
//! This crate is `no_std` (with `alloc`) and carries the numerical kernels,
//! the element data model, leverage computation by several routes, the
//! Chernoff-sized sampler, and a PCG solver for the resulting singular
//! semidefinite systems. All kernels are written in-repo so results are
//! reproducible to the documented tolerances; file formats and the CLI live
//! in the companion `feas` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chol;
pub mod dense;
pub mod eig;
pub mod error;
pub mod generators;
pub mod leverage;
pub mod model;
pub mod pcg;
pub mod pencil;
pub mod qr;
pub mod rng;
pub mod sample;
pub mod sparse;
pub mod tol;

pub use dense::{Mat, SymmetricDense};
pub use error::Error;
pub use model::{Assembly, ElementMatrix, RigidityGraph, WellFormedReport};
pub use sparse::{SparseSymmetric, SparseTall};

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
