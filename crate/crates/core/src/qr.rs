//! Householder QR for dense rectangular matrices, and the thin QR of a
//! stacked element factor.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::Mat;
use crate::error::Error;
use crate::sparse::SparseTall;
use crate::tol;
use crate::Result;

/// QR factorization with the Householder vectors kept in-place.
pub struct QrFactors {
    qr: Mat,
    rdiag: Vec<f64>,
}

impl QrFactors {
    /// Factor `a` (m x n with m >= n).
    pub fn new(mut a: Mat) -> Self {
        let m = a.rows();
        let n = a.cols();
        assert!(m >= n, "QR expects at least as many rows as columns");
        let mut rdiag = vec![0.0; n];

        for k in 0..n {
            let mut nrm = 0.0;
            for i in k..m {
                nrm = libm::hypot(nrm, a.get(i, k));
            }
            if nrm != 0.0 {
                if a.get(k, k) < 0.0 {
                    nrm = -nrm;
                }
                for i in k..m {
                    let v = a.get(i, k) / nrm;
                    a.set(i, k, v);
                }
                a.set(k, k, a.get(k, k) + 1.0);
                for j in (k + 1)..n {
                    let mut s = 0.0;
                    for i in k..m {
                        s += a.get(i, k) * a.get(i, j);
                    }
                    s = -s / a.get(k, k);
                    for i in k..m {
                        let v = a.get(i, j) + s * a.get(i, k);
                        a.set(i, j, v);
                    }
                }
            }
            rdiag[k] = -nrm;
        }

        QrFactors { qr: a, rdiag }
    }

    pub fn rdiag(&self) -> &[f64] {
        &self.rdiag
    }

    /// Numerical rank from the R diagonal at the crate rank tolerance.
    pub fn rank(&self) -> usize {
        let scale = self.rdiag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0;
        }
        self.rdiag.iter().filter(|v| v.abs() > tol::REL_RANK * scale).count()
    }

    /// First `rows` rows of R (rows <= n).
    pub fn r(&self, rows: usize) -> Mat {
        let n = self.qr.cols();
        assert!(rows <= n);
        let mut r = Mat::zeros(rows, n);
        for i in 0..rows {
            r.set(i, i, self.rdiag[i]);
            for j in (i + 1)..n {
                r.set(i, j, self.qr.get(i, j));
            }
        }
        r
    }

    /// Explicit orthonormal columns `0..cols` of Q (cols <= m). Columns past
    /// the input's column count extend the basis to the orthogonal complement.
    pub fn form_q(&self, cols: usize) -> Mat {
        let m = self.qr.rows();
        let n = self.qr.cols();
        assert!(cols <= m);
        let mut q = Mat::zeros(m, cols);
        for j in 0..cols.min(m) {
            q.set(j, j, 1.0);
        }
        for k in (0..n).rev() {
            if self.qr.get(k, k) == 0.0 {
                continue;
            }
            for j in k..cols {
                let mut s = 0.0;
                for i in k..m {
                    s += self.qr.get(i, k) * q.get(i, j);
                }
                s = -s / self.qr.get(k, k);
                for i in k..m {
                    let v = q.get(i, j) + s * self.qr.get(i, k);
                    q.set(i, j, v);
                }
            }
        }
        q
    }
}

/// Thin QR of a stacked factor: `f = q * r` with `q` holding exactly
/// `expected_rank` orthonormal columns (an orthonormal basis of range(f))
/// and `r` the matching leading rows of the triangular factor.
///
/// The detected rank must equal `expected_rank` (for a well-formed model,
/// `n - d`); anything else is a rank-deficiency error. Densifies `f`, so
/// this is a desk-scale route.
pub fn thin_qr(f: &SparseTall, expected_rank: usize) -> Result<(Mat, Mat)> {
    // Wide stacked factors (few elements) are padded with zero rows; the
    // padded rows of Q come out exactly zero, so element blocks and R are
    // unaffected.
    let dense = if f.rows() >= f.cols() {
        f.to_dense()
    } else {
        let mut padded = Mat::zeros(f.cols(), f.cols());
        for i in 0..f.rows() {
            for (j, v) in f.row(i) {
                padded.set(i, j, v);
            }
        }
        padded
    };
    let qr = QrFactors::new(dense);
    // The retained basis is the leading columns, so the nonzero part of the
    // R diagonal must be exactly the leading block (minimal rank deficiency
    // pushes all dependence to the trailing columns).
    let rdiag = qr.rdiag();
    let scale = rdiag.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let cut = tol::REL_RANK * scale.max(tol::EIG_FLOOR);
    let leading = rdiag.iter().take_while(|v| v.abs() > cut).count();
    let total = rdiag.iter().filter(|v| v.abs() > cut).count();
    if leading != expected_rank || total != expected_rank {
        return Err(Error::Model {
            element: None,
            reason: alloc::format!(
                "global factor has rank {total} (leading block {leading}), expected {expected_rank}; model is not well-formed"
            ),
        });
    }
    let q = qr.form_q(expected_rank).slice_rows(0, f.rows());
    Ok((q, qr.r(expected_rank)))
}

/// Orthonormal basis of range(a): thin Q columns up to the detected rank.
pub fn orthonormal_range(a: &Mat) -> Mat {
    let qr = QrFactors::new(a.clone());
    let rank = qr.rank();
    qr.form_q(rank)
}

/// Orthonormal basis of the orthogonal complement of range(a) in R^m.
pub fn orthonormal_complement(a: &Mat) -> Mat {
    let m = a.rows();
    let qr = QrFactors::new(a.clone());
    let rank = qr.rank();
    let q = qr.form_q(m);
    let mut out = Mat::zeros(m, m - rank);
    for i in 0..m {
        for j in rank..m {
            out.set(i, j - rank, q.get(i, j));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_and_orthonormal() {
        let m = 7;
        let n = 4;
        let mut a = Mat::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                a.set(i, j, libm::sin((1 + i * n + j) as f64));
            }
        }
        let qr = QrFactors::new(a.clone());
        assert_eq!(qr.rank(), n);
        let q = qr.form_q(n);
        let r = qr.r(n);

        let qtq = q.gram();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((qtq.get(i, j) - want).abs() < 1e-12);
            }
        }
        let rec = q.matmul(&r);
        for i in 0..m {
            for j in 0..n {
                assert!((rec.get(i, j) - a.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn detects_rank_deficiency() {
        // Third column = sum of the first two.
        let mut a = Mat::zeros(5, 3);
        for i in 0..5 {
            a.set(i, 0, (i + 1) as f64);
            a.set(i, 1, libm::cos(i as f64));
            a.set(i, 2, a.get(i, 0) + a.get(i, 1));
        }
        let qr = QrFactors::new(a);
        assert_eq!(qr.rank(), 2);
    }

    #[test]
    fn complement_basis_spans_the_rest() {
        let mut n_basis = Mat::zeros(5, 1);
        for i in 0..5 {
            n_basis.set(i, 0, 1.0);
        }
        let z = orthonormal_complement(&n_basis);
        assert_eq!(z.cols(), 4);
        // Columns orthonormal and orthogonal to the all-ones vector.
        let ztz = z.gram();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ztz.get(i, j) - want).abs() < 1e-12);
            }
        }
        for j in 0..4 {
            let mut s = 0.0;
            for i in 0..5 {
                s += z.get(i, j);
            }
            assert!(s.abs() < 1e-12);
        }
    }
}
