//! Generalized eigenvalues of symmetric PSD pencils with a common null space.
//!
//! The primary route deflates onto range(B): with `Q` the orthonormal
//! eigenbasis of `B`'s range and `D` the corresponding positive eigenvalues,
//! the finite generalized eigenvalues of `(A, B)` are the eigenvalues of
//! `D^{-1/2} Q^T A Q D^{-1/2}`. A second route computes the same spectrum
//! from explicit factors `A = U U^T`, `B = V V^T` as the squared nonzero
//! singular values of `V^+ U`; the two are cross-checked in tests.

use alloc::vec::Vec;

use crate::dense::{Mat, SymmetricDense};
use crate::eig::{pinv, sym_eig};
use crate::error::Error;
use crate::tol;
use crate::Result;

/// Finite spectrum of a semidefinite pencil.
#[derive(Debug, Clone)]
pub struct PencilSpectrum {
    /// Finite generalized eigenvalues, ascending.
    pub finite_eigenvalues: Vec<f64>,
    /// Dimension of the shared null space.
    pub common_null_dim: usize,
}

impl PencilSpectrum {
    pub fn lambda_min(&self) -> f64 {
        self.finite_eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.finite_eigenvalues.last().unwrap()
    }

    /// Sum of the finite eigenvalues.
    pub fn trace(&self) -> f64 {
        self.finite_eigenvalues.iter().sum()
    }

    /// Ratio of extreme finite eigenvalues.
    pub fn kappa(&self) -> f64 {
        self.lambda_max() / self.lambda_min()
    }
}

/// Finite generalized eigenvalues of `(A, B)` for symmetric PSD `A`, `B`
/// with `null(A) = null(B)`.
///
/// The shared-null-space precondition is enforced: the ranks must agree
/// after projecting `A` onto range(B), and `A` must live inside range(B)
/// up to the crate's range-mismatch tolerance.
pub fn pencil_eigs(a: &SymmetricDense, b: &SymmetricDense, rel_tol: f64) -> Result<PencilSpectrum> {
    if a.order() != b.order() {
        return Err(Error::Domain("pencil matrices must have the same order"));
    }
    let eig_b = sym_eig(b, rel_tol)?;
    pencil_eigs_with_b(a, &eig_b, rel_tol)
}

/// As `pencil_eigs`, reusing a precomputed eigendecomposition of `B`.
pub fn pencil_eigs_with_b(
    a: &SymmetricDense,
    eig_b: &crate::eig::EigDecomposition,
    rel_tol: f64,
) -> Result<PencilSpectrum> {
    let n = a.order();
    if eig_b.values.len() != n {
        return Err(Error::Domain("pencil matrices must have the same order"));
    }
    let rank_b = eig_b.rank;
    if rank_b == 0 {
        return Err(Error::NullSpaceMismatch { detail: "B is identically zero" });
    }

    let q = eig_b.range_basis(); // n x rank_b

    // Reduce A onto range(B): A_r = Q^T A Q.
    let a_full = a.to_full();
    let aq = a_full.matmul(&q); // n x rank_b
    let a_r = q.transpose_matmul(&aq); // rank_b x rank_b

    // Range-compatibility: || A - P A P ||_F relative to ||A||_F, computed
    // as ||A||^2 - 2||AQ Q^T||... expanded directly for clarity at desk scale.
    let p_a_p = q.matmul(&a_r).matmul(&q.transpose());
    let mut mismatch = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = a_full.get(i, j) - p_a_p.get(i, j);
            mismatch += d * d;
        }
    }
    let a_norm = a.frob_norm();
    if libm::sqrt(mismatch) > tol::RANGE_MISMATCH * f64::max(a_norm, tol::EIG_FLOOR) {
        return Err(Error::NullSpaceMismatch { detail: "range(A) is not contained in range(B)" });
    }

    // Whiten by B's positive eigenvalues and decompose.
    let mut m = SymmetricDense::zeros(rank_b);
    for i in 0..rank_b {
        let di = libm::sqrt(eig_b.values[i]);
        for j in 0..=i {
            let dj = libm::sqrt(eig_b.values[j]);
            m.set(i, j, a_r.get(i, j) / (di * dj));
        }
    }
    let eig_m = sym_eig(&m, rel_tol)?;
    if eig_m.rank < rank_b {
        return Err(Error::NullSpaceMismatch {
            detail: "rank(A) < rank(B) after projection",
        });
    }

    let mut finite: Vec<f64> = eig_m.values;
    finite.reverse(); // ascending
    Ok(PencilSpectrum { finite_eigenvalues: finite, common_null_dim: n - rank_b })
}

/// Finite generalized eigenvalues of `(U U^T, V V^T)` from the factors:
/// the squared nonzero singular values of `V^+ U`. `u` and `v` must have the
/// same number of rows; column counts may differ freely.
pub fn pencil_eigs_factored(u: &Mat, v: &Mat, rel_tol: f64) -> Result<PencilSpectrum> {
    if u.rows() != v.rows() {
        return Err(Error::Domain("factored pencil needs factors with equal row counts"));
    }
    let n = u.rows();

    // V^+ = (V^T V)^+ V^T, so W = V^+ U = (V^T V)^+ (V^T U).
    let vtv = v.gram();
    let vtv_pinv = pinv(&vtv, rel_tol)?;
    let vtu = v.transpose_matmul(u);
    let w = vtv_pinv.to_full().matmul(&vtu);

    // Squared singular values of W = eigenvalues of W^T W.
    let wtw = w.gram();
    let eig = sym_eig(&wtw, rel_tol)?;
    let mut finite: Vec<f64> =
        eig.values.iter().copied().filter(|l| *l > eig.tolerance_used).collect();
    finite.reverse();
    if finite.is_empty() {
        return Err(Error::NullSpaceMismatch { detail: "factored pencil has empty spectrum" });
    }
    let rank = finite.len();
    Ok(PencilSpectrum { finite_eigenvalues: finite, common_null_dim: n - rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tol::REL_RANK;

    #[test]
    fn identity_pencil_is_all_ones() {
        // (A, A) for PSD A of rank k has k unit eigenvalues.
        let mut basis = Mat::zeros(5, 3);
        for i in 0..5 {
            for j in 0..3 {
                basis.set(i, j, libm::sin((1 + 3 * i + j) as f64));
            }
        }
        let a = SymmetricDense::symmetrized(&basis.matmul(&basis.transpose()));
        let spec = pencil_eigs(&a, &a, REL_RANK).unwrap();
        assert_eq!(spec.common_null_dim, 2);
        assert_eq!(spec.finite_eigenvalues.len(), 3);
        for l in &spec.finite_eigenvalues {
            assert!((l - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn scalar_pencil_on_rank_one() {
        let a = SymmetricDense::from_lower_of(2, &[1.0, -1.0, -1.0, 1.0]);
        let b = a.scaled(1.5);
        let spec = pencil_eigs(&a, &b, REL_RANK).unwrap();
        assert_eq!(spec.common_null_dim, 1);
        assert_eq!(spec.finite_eigenvalues.len(), 1);
        assert!((spec.finite_eigenvalues[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cycle_edge_removal_condition_number() {
        // 3-cycle unit Laplacian vs the same with one edge removed: the
        // finite spectrum has extreme ratio 3.
        let k = SymmetricDense::from_lower_of(
            3,
            &[2.0, -1.0, -1.0, -1.0, 2.0, -1.0, -1.0, -1.0, 2.0],
        );
        let mut k_minus = k.clone();
        // remove edge (0,1)
        k_minus.add_to(0, 0, -1.0);
        k_minus.add_to(1, 1, -1.0);
        k_minus.add_to(0, 1, 1.0);
        let spec = pencil_eigs(&k, &k_minus, REL_RANK).unwrap();
        assert_eq!(spec.common_null_dim, 1);
        assert!((spec.kappa() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn mismatched_null_spaces_error() {
        let a = SymmetricDense::identity(3);
        let b = SymmetricDense::from_diag(&[1.0, 1.0, 0.0]);
        match pencil_eigs(&a, &b, REL_RANK) {
            Err(Error::NullSpaceMismatch { .. }) => {}
            other => panic!("expected null-space mismatch, got {other:?}"),
        }
    }

    #[test]
    fn scale_covariance() {
        let a = SymmetricDense::from_lower_of(2, &[2.0, 1.0, 1.0, 2.0]);
        let b = SymmetricDense::from_lower_of(2, &[3.0, 0.0, 0.0, 1.0]);
        let base = pencil_eigs(&a, &b, REL_RANK).unwrap();
        let scaled = pencil_eigs(&a.scaled(7.5), &b, REL_RANK).unwrap();
        for (x, y) in base.finite_eigenvalues.iter().zip(&scaled.finite_eigenvalues) {
            assert!((7.5 * x - y).abs() <= 1e-10 * y.abs());
        }
    }

    #[test]
    fn factored_route_agrees_with_deflation() {
        // A = U U^T, B = V V^T sharing null space by sharing column span.
        let mut u = Mat::zeros(6, 3);
        let mut shape = Mat::zeros(6, 3);
        for i in 0..6 {
            for j in 0..3 {
                shape.set(i, j, libm::sin((1 + i * 3 + j) as f64));
            }
        }
        // U = shape * diag(1,2,3), V = shape * mixing
        let mut mix = Mat::zeros(3, 3);
        mix.set(0, 0, 1.0);
        mix.set(1, 1, 0.5);
        mix.set(2, 2, 2.0);
        mix.set(0, 1, 0.3);
        mix.set(1, 0, 0.3);
        for i in 0..6 {
            for j in 0..3 {
                u.set(i, j, shape.get(i, j) * (1 + j) as f64);
            }
        }
        let v = shape.matmul(&mix);

        let a = SymmetricDense::symmetrized(&u.matmul(&u.transpose()));
        let b = SymmetricDense::symmetrized(&v.matmul(&v.transpose()));

        let by_deflation = pencil_eigs(&a, &b, REL_RANK).unwrap();
        let by_factors = pencil_eigs_factored(&u, &v, REL_RANK).unwrap();
        assert_eq!(by_deflation.common_null_dim, by_factors.common_null_dim);
        assert_eq!(
            by_deflation.finite_eigenvalues.len(),
            by_factors.finite_eigenvalues.len()
        );
        for (x, y) in by_deflation
            .finite_eigenvalues
            .iter()
            .zip(&by_factors.finite_eigenvalues)
        {
            assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}
