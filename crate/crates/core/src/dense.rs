//! Dense matrix storage: packed symmetric matrices and general rectangular
//! matrices. Row-major throughout.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::Result;

/// Symmetric matrix storing only the lower triangle (row-major, row `i`
/// holding entries `(i, 0..=i)`), so `a[i][j] == a[j][i]` is structural.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricDense {
    order: usize,
    tri: Vec<f64>,
}

#[inline]
fn tri_index(i: usize, j: usize) -> usize {
    debug_assert!(j <= i);
    i * (i + 1) / 2 + j
}

impl SymmetricDense {
    pub fn zeros(order: usize) -> Self {
        SymmetricDense { order, tri: vec![0.0; order * (order + 1) / 2] }
    }

    pub fn identity(order: usize) -> Self {
        let mut a = Self::zeros(order);
        for i in 0..order {
            a.set(i, i, 1.0);
        }
        a
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut a = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            a.set(i, i, v);
        }
        a
    }

    /// Build from a full row-major square slice; the strict upper triangle is
    /// ignored, so callers feeding a numerically symmetric matrix get its
    /// lower triangle.
    pub fn from_lower_of(order: usize, full: &[f64]) -> Self {
        assert_eq!(full.len(), order * order);
        let mut a = Self::zeros(order);
        for i in 0..order {
            for j in 0..=i {
                a.set(i, j, full[i * order + j]);
            }
        }
        a
    }

    /// Build from a full matrix, averaging the two triangles. Used where an
    /// algebraically symmetric result is assembled from unsymmetric arithmetic.
    pub fn symmetrized(m: &Mat) -> Self {
        assert_eq!(m.rows(), m.cols());
        let n = m.rows();
        let mut a = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                a.set(i, j, 0.5 * (m.get(i, j) + m.get(j, i)));
            }
        }
        a
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.tri[tri_index(i, j)]
        } else {
            self.tri[tri_index(j, i)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if j <= i {
            self.tri[tri_index(i, j)] = v;
        } else {
            self.tri[tri_index(j, i)] = v;
        }
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        if j <= i {
            self.tri[tri_index(i, j)] += v;
        } else {
            self.tri[tri_index(j, i)] += v;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.tri {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// `self - other`, orders must match.
    pub fn sub(&self, other: &SymmetricDense) -> Self {
        assert_eq!(self.order, other.order);
        let mut out = self.clone();
        for (a, b) in out.tri.iter_mut().zip(other.tri.iter()) {
            *a -= *b;
        }
        out
    }

    pub fn to_full(&self) -> Mat {
        let n = self.order;
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.get(i, j));
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let n = self.order;
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.get(i, j) * x[j];
            }
            y[i] = s;
        }
    }

    pub fn frob_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.order {
            for j in 0..=i {
                let v = self.get(i, j);
                let w = if i == j { 1.0 } else { 2.0 };
                s += w * v * v;
            }
        }
        libm::sqrt(s)
    }

    pub fn max_abs(&self) -> f64 {
        self.tri.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.order).fold(0.0_f64, |m, i| m.max(self.get(i, i).abs()))
    }

    /// Quadratic form `x^T A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let n = self.order;
        let mut s = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.get(i, j) * x[j];
            }
            s += x[i] * row;
        }
        s
    }
}

/// General dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Domain("matrix data length does not match its shape"));
        }
        Ok(Mat { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for j in 0..other.cols {
                    out_row[j] += a * orow[j];
                }
            }
        }
        out
    }

    /// `self^T * other`.
    pub fn transpose_matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.rows, other.rows);
        let mut out = Mat::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.get(k, i);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(i);
                for j in 0..other.cols {
                    out_row[j] += a * orow[j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for i in 0..self.rows {
            let row = self.row(i);
            let mut s = 0.0;
            for j in 0..self.cols {
                s += row[j] * x[j];
            }
            y[i] = s;
        }
    }

    /// Gram matrix `self^T * self` stored symmetric.
    pub fn gram(&self) -> SymmetricDense {
        let mut g = SymmetricDense::zeros(self.cols);
        for k in 0..self.rows {
            let row = self.row(k);
            for i in 0..self.cols {
                let a = row[i];
                if a == 0.0 {
                    continue;
                }
                for j in 0..=i {
                    g.add_to(i, j, a * row[j]);
                }
            }
        }
        g
    }

    /// Outer Gram `self * self^T` stored symmetric.
    pub fn outer_gram(&self) -> SymmetricDense {
        let mut g = SymmetricDense::zeros(self.rows);
        for i in 0..self.rows {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..self.cols {
                    s += self.get(i, k) * self.get(j, k);
                }
                g.set(i, j, s);
            }
        }
        g
    }

    /// Keep only the first `k` columns.
    pub fn take_cols(&self, k: usize) -> Mat {
        assert!(k <= self.cols);
        let mut out = Mat::zeros(self.rows, k);
        for i in 0..self.rows {
            out.row_mut(i).copy_from_slice(&self.row(i)[..k]);
        }
        out
    }

    /// Rows `lo..hi` as a new matrix.
    pub fn slice_rows(&self, lo: usize, hi: usize) -> Mat {
        assert!(lo <= hi && hi <= self.rows);
        Mat {
            rows: hi - lo,
            cols: self.cols,
            data: self.data[lo * self.cols..hi * self.cols].to_vec(),
        }
    }

    pub fn frob_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }
}

/// Euclidean norm of a vector.
pub fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v * v).sum())
}

/// Dot product.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_storage_is_structural() {
        let mut a = SymmetricDense::zeros(3);
        a.set(2, 0, 5.0);
        assert_eq!(a.get(0, 2), 5.0);
        a.set(0, 2, -1.0);
        assert_eq!(a.get(2, 0), -1.0);
    }

    #[test]
    fn matmul_matches_hand_product() {
        let a = Mat::from_rows(2, 3, alloc::vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = Mat::from_rows(3, 2, alloc::vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b);
        assert_eq!(c.get(0, 0), 58.0);
        assert_eq!(c.get(0, 1), 64.0);
        assert_eq!(c.get(1, 0), 139.0);
        assert_eq!(c.get(1, 1), 154.0);
    }

    #[test]
    fn gram_is_transpose_times_self() {
        let a = Mat::from_rows(3, 2, alloc::vec![1.0, 2.0, 0.0, 1.0, -1.0, 3.0]).unwrap();
        let g = a.gram();
        let gt = a.transpose().matmul(&a);
        for i in 0..2 {
            for j in 0..2 {
                assert!((g.get(i, j) - gt.get(i, j)).abs() < 1e-15);
            }
        }
    }
}
