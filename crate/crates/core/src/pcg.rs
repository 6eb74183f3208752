//! Preconditioned conjugate gradients on singular consistent systems, the
//! pseudoinverse application of a factored preconditioner, and exact
//! generalized condition numbers at desk scale.
//!
//! Singular systems are handled by explicit projection against the model's
//! null basis rather than by pinning degrees of freedom: right-hand side,
//! iterates, and preconditioned residuals are all kept orthogonal to
//! range(N).

use alloc::vec;
use alloc::vec::Vec;

use crate::chol::CholeskyFactor;
use crate::dense::{dot, norm2, Mat, SymmetricDense};
use crate::eig::sym_eig;
use crate::error::Error;
use crate::pencil::pencil_eigs;
use crate::qr::{orthonormal_complement, orthonormal_range};
use crate::sparse::SparseSymmetric;
use crate::tol;
use crate::Result;

/// Size gate for the dense exact condition number.
pub const CONDITION_ORDER_LIMIT: usize = 2000;

/// Orthogonal projector onto the complement of a null basis.
pub struct NullProjector {
    q: Option<Mat>,
}

impl NullProjector {
    /// Orthonormalizes the basis once; an empty basis projects trivially.
    pub fn new(null_basis: &Mat) -> Self {
        if null_basis.cols() == 0 {
            return NullProjector { q: None };
        }
        NullProjector { q: Some(orthonormal_range(null_basis)) }
    }

    /// `v -= Q (Q^T v)` in place.
    pub fn project(&self, v: &mut [f64]) {
        let Some(q) = &self.q else { return };
        let d = q.cols();
        let mut coeffs = vec![0.0; d];
        for j in 0..d {
            let mut s = 0.0;
            for i in 0..v.len() {
                s += q.get(i, j) * v[i];
            }
            coeffs[j] = s;
        }
        for i in 0..v.len() {
            let mut s = v[i];
            for j in 0..d {
                s -= q.get(i, j) * coeffs[j];
            }
            v[i] = s;
        }
    }
}

/// Outcome of one PCG run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual after each iteration.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Extreme-eigenvalue ratio of the preconditioned operator estimated
    /// from the CG coefficients (Lanczos); informational.
    pub kappa_estimate: Option<f64>,
}

/// Apply the pseudoinverse of the factored preconditioner: solve on the
/// range (skipped pivots contribute zero), then re-project orthogonal to
/// range(N). The right-hand side must lie in the operator's range; the
/// residual of the solve is measured and checked.
pub fn apply_pinv(
    p: &SparseSymmetric,
    factor: &CholeskyFactor,
    b: &[f64],
    projector: &NullProjector,
) -> Result<Vec<f64>> {
    let mut x = factor.solve(b);
    projector.project(&mut x);
    let b_norm = norm2(b);
    if b_norm > 0.0 {
        let mut px = vec![0.0; b.len()];
        p.matvec(&x, &mut px);
        let mut rnorm2 = 0.0;
        for i in 0..b.len() {
            let d = px[i] - b[i];
            rnorm2 += d * d;
        }
        let rel = libm::sqrt(rnorm2) / b_norm;
        if rel > tol::CONSISTENCY {
            return Err(Error::Consistency { residual: rel });
        }
    }
    Ok(x)
}

/// Standard PCG on `K x = b` with the factored preconditioner, iterates kept
/// orthogonal to range(N). Convergence is the 2-norm relative residual;
/// hitting `maxit` is reported, not an error.
pub fn pcg(
    k: &SparseSymmetric,
    b: &[f64],
    p: &SparseSymmetric,
    factor: &CholeskyFactor,
    tol_rel: f64,
    maxit: usize,
    null_basis: &Mat,
) -> Result<SolveReport> {
    let n = k.order();
    if b.len() != n || p.order() != n || factor.order() != n {
        return Err(Error::Domain("solver dimensions disagree"));
    }
    if !factor.usable() {
        return Err(Error::Domain("preconditioner factor is unusable (rank deficit beyond d)"));
    }
    if !(tol_rel > 0.0) {
        return Err(Error::Domain("tolerance must be positive"));
    }
    let projector = NullProjector::new(null_basis);

    let mut rhs = b.to_vec();
    projector.project(&mut rhs);
    let b_norm = norm2(&rhs);
    let mut report = SolveReport {
        iterations: 0,
        residual_history: Vec::new(),
        converged: false,
        kappa_estimate: None,
    };
    if b_norm == 0.0 {
        report.converged = true;
        return Ok(report);
    }

    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut z = apply_pinv(p, factor, &r, &projector)?;
    let mut rho = dot(&r, &z);
    if rho <= 0.0 {
        return Err(Error::Breakdown("initial preconditioned inner product is not positive"));
    }
    let mut dir = z.clone();
    let mut q = vec![0.0; n];

    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    for _ in 0..maxit {
        k.matvec(&dir, &mut q);
        let curvature = dot(&dir, &q);
        if curvature <= 0.0 {
            return Err(Error::Breakdown("non-positive curvature direction"));
        }
        let alpha = rho / curvature;
        alphas.push(alpha);
        for i in 0..n {
            x[i] += alpha * dir[i];
            r[i] -= alpha * q[i];
        }
        projector.project(&mut x);
        projector.project(&mut r);

        let relres = norm2(&r) / b_norm;
        report.residual_history.push(relres);
        report.iterations += 1;

        if relres <= tol_rel {
            // Confirm with the true residual before declaring convergence.
            let mut kx = vec![0.0; n];
            k.matvec(&x, &mut kx);
            let mut true_norm2 = 0.0;
            for i in 0..n {
                let d = kx[i] - rhs[i];
                true_norm2 += d * d;
            }
            if libm::sqrt(true_norm2) / b_norm <= tol_rel {
                report.converged = true;
                break;
            }
        }

        z = apply_pinv(p, factor, &r, &projector)?;
        let rho_next = dot(&r, &z);
        if rho_next <= 0.0 {
            return Err(Error::Breakdown("preconditioned inner product is not positive"));
        }
        let beta = rho_next / rho;
        betas.push(beta);
        rho = rho_next;
        for i in 0..n {
            dir[i] = z[i] + beta * dir[i];
        }
    }

    report.kappa_estimate = lanczos_kappa(&alphas, &betas);
    Ok(report)
}

// Extreme-eigenvalue ratio of the Lanczos tridiagonal built from the CG
// coefficients.
fn lanczos_kappa(alphas: &[f64], betas: &[f64]) -> Option<f64> {
    let it = alphas.len();
    if it < 2 {
        return None;
    }
    let mut t = SymmetricDense::zeros(it);
    for i in 0..it {
        let mut diag = 1.0 / alphas[i];
        if i > 0 {
            diag += betas[i - 1] / alphas[i - 1];
        }
        t.set(i, i, diag);
        if i > 0 {
            t.set(i, i - 1, libm::sqrt(betas[i - 1]) / alphas[i - 1]);
        }
    }
    let eig = sym_eig(&t, tol::REL_RANK).ok()?;
    let max = eig.values.first().copied()?;
    let min = eig.values.iter().rev().find(|v| **v > 0.0)?;
    Some(max / min)
}

/// Exact generalized condition number `kappa(K, P)` after deflating the
/// declared null space: dense, gated to order 2000. A preconditioner whose
/// null space exceeds range(N) is reported as the dedicated failure mode.
pub fn exact_generalized_condition(
    k: &SparseSymmetric,
    p: &SparseSymmetric,
    null_basis: &Mat,
) -> Result<f64> {
    let n = k.order();
    if p.order() != n || null_basis.rows() != n {
        return Err(Error::Domain("operator dimensions disagree"));
    }
    if n > CONDITION_ORDER_LIMIT {
        return Err(Error::SizeGate { limit: CONDITION_ORDER_LIMIT, got: n });
    }
    let d = null_basis.cols();

    let (k_red, p_red) = if d == 0 {
        (k.to_dense(), p.to_dense())
    } else {
        let z = orthonormal_complement(null_basis); // n x (n - d)
        (reduce(k, &z), reduce(p, &z))
    };

    match pencil_eigs(&k_red, &p_red, tol::REL_RANK) {
        Ok(spec) => Ok(spec.kappa()),
        Err(Error::NullSpaceMismatch { .. }) => Err(Error::PreconditionerNull),
        Err(e) => Err(e),
    }
}

// Z^T A Z for sparse A and dense Z.
fn reduce(a: &SparseSymmetric, z: &Mat) -> SymmetricDense {
    let n = a.order();
    let m = z.cols();
    let mut az = Mat::zeros(n, m);
    let mut col = vec![0.0; n];
    let mut out = vec![0.0; n];
    for j in 0..m {
        for i in 0..n {
            col[i] = z.get(i, j);
        }
        a.matvec(&col, &mut out);
        for i in 0..n {
            az.set(i, j, out[i]);
        }
    }
    SymmetricDense::symmetrized(&z.transpose_matmul(&az))
}
