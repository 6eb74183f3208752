//! Symmetric eigendecomposition and pseudoinverse.
//!
//! Householder reduction to tridiagonal form followed by QL iteration with
//! implicit shifts, after the classical EISPACK `tred2`/`tql2` pair. Written
//! in-repo so eigenvalues are reproducible across platforms to the stated
//! tolerances.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{Mat, SymmetricDense};
use crate::error::Error;
use crate::tol;
use crate::Result;

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors; column `i` pairs with `values[i]`.
    pub vectors: Mat,
    /// Number of eigenvalues with `|lambda| > tolerance_used`.
    pub rank: usize,
    /// The absolute cutoff that produced `rank`.
    pub tolerance_used: f64,
}

impl EigDecomposition {
    /// Columns of `vectors` spanning the numerical range (first `rank`).
    pub fn range_basis(&self) -> Mat {
        self.vectors.take_cols(self.rank)
    }

    /// Reconstruction `V diag(values) V^T` as a symmetric matrix.
    pub fn reconstruct(&self) -> SymmetricDense {
        let n = self.values.len();
        let mut a = SymmetricDense::zeros(n);
        for k in 0..n {
            let lam = self.values[k];
            if lam == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors.get(i, k);
                if vik == 0.0 {
                    continue;
                }
                for j in 0..=i {
                    a.add_to(i, j, lam * vik * self.vectors.get(j, k));
                }
            }
        }
        a
    }
}

const MAX_QL_ITERS: usize = 64;

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// `rel_tol` in `(0, 1)` sets the rank cutoff at
/// `rel_tol * max(|lambda_1|, eps)`; the `eps` floor keeps the all-zero
/// matrix at rank zero instead of dividing by nothing.
pub fn sym_eig(a: &SymmetricDense, rel_tol: f64) -> Result<EigDecomposition> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::Domain("rel_tol must lie in (0, 1)"));
    }
    let n = a.order();
    if n == 0 {
        return Err(Error::Domain("matrix order must be at least 1"));
    }

    let mut v = a.to_full();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    if n == 1 {
        d[0] = a.get(0, 0);
        v.set(0, 0, 1.0);
    } else {
        tred2(n, &mut v, &mut d, &mut e);
        tql2(n, &mut d, &mut e, &mut v).map_err(|_| Error::EigNonConvergence { order: n })?;
    }

    // Descending order, permuting eigenvector columns alongside.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap());
    let values: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (newcol, &oldcol) in idx.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, newcol, v.get(r, oldcol));
        }
    }

    let tolerance_used = rel_tol * f64::max(values[0].abs(), tol::EIG_FLOOR);
    let rank = values.iter().filter(|l| l.abs() > tolerance_used).count();

    Ok(EigDecomposition { values, vectors, rank, tolerance_used })
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
///
/// Eigenvalues below the rank cutoff are treated as zero, so the result has
/// the same rank and null space as the input.
pub fn pinv(a: &SymmetricDense, rel_tol: f64) -> Result<SymmetricDense> {
    let eig = sym_eig(a, rel_tol)?;
    let n = a.order();
    let mut out = SymmetricDense::zeros(n);
    for k in 0..n {
        let lam = eig.values[k];
        if lam.abs() <= eig.tolerance_used {
            continue;
        }
        let inv = 1.0 / lam;
        for i in 0..n {
            let vik = eig.vectors.get(i, k);
            if vik == 0.0 {
                continue;
            }
            for j in 0..=i {
                out.add_to(i, j, inv * vik * eig.vectors.get(j, k));
            }
        }
    }
    Ok(out)
}

// Householder reduction of v (loaded with the full symmetric matrix) to
// tridiagonal form; d receives the diagonal, e the subdiagonal, and v the
// accumulated orthogonal transformation.
fn tred2(n: usize, v: &mut Mat, d: &mut [f64], e: &mut [f64]) {
    for j in 0..n {
        d[j] = v.get(n - 1, j);
    }

    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        let mut scale = 0.0;
        if l > 0 {
            for item in d.iter().take(i) {
                scale += item.abs();
            }
        }
        if scale == 0.0 {
            e[i] = d[l];
            for j in 0..i {
                d[j] = v.get(l, j);
                v.set(i, j, 0.0);
                v.set(j, i, 0.0);
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let mut f = d[l];
            let mut g = if f > 0.0 { -libm::sqrt(h) } else { libm::sqrt(h) };
            e[i] = scale * g;
            h -= f * g;
            d[l] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v.set(j, i, f);
                g = e[j] + v.get(j, j) * f;
                for k in (j + 1)..=l {
                    g += v.get(k, j) * d[k];
                    e[k] += v.get(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..=l {
                    let val = v.get(k, j) - (f * e[k] + g * d[k]);
                    v.set(k, j, val);
                }
                d[j] = v.get(l, j);
                v.set(i, j, 0.0);
            }
        }
        d[i] = h;
    }

    for i in 0..(n - 1) {
        v.set(n - 1, i, v.get(i, i));
        v.set(i, i, 1.0);
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v.get(k, i + 1) / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v.get(k, i + 1) * v.get(k, j);
                }
                for k in 0..=i {
                    let val = v.get(k, j) - g * d[k];
                    v.set(k, j, val);
                }
            }
        }
        for k in 0..=i {
            v.set(k, i + 1, 0.0);
        }
    }
    for j in 0..n {
        d[j] = v.get(n - 1, j);
        v.set(n - 1, j, 0.0);
    }
    v.set(n - 1, n - 1, 1.0);
    e[0] = 0.0;
}

// QL iteration with implicit shifts on the tridiagonal (d, e), accumulating
// rotations into v. Errors if any eigenvalue fails to converge within the
// sweep budget.
fn tql2(n: usize, d: &mut [f64], e: &mut [f64], v: &mut Mat) -> core::result::Result<(), ()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0_f64;
    let mut tst1 = 0.0_f64;
    let eps = f64::EPSILON;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERS {
                    return Err(());
                }

                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    for k in 0..n {
                        h = v.get(k, i + 1);
                        v.set(k, i + 1, s * v.get(k, i) + c * h);
                        v.set(k, i, c * v.get(k, i) - s * h);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
