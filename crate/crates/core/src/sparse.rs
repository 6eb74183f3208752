//! Sparse matrix storage: symmetric (one triangle, coordinate form) and tall
//! rectangular (compressed rows) for stacked element factors.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{Mat, SymmetricDense};
use crate::error::Error;
use crate::Result;

/// Sparse symmetric matrix storing the lower triangle (`row >= col`) as
/// sorted, duplicate-free coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetric {
    order: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSymmetric {
    /// Build from unsorted triplets; either triangle accepted, duplicates
    /// accumulate. Entries that sum to exact zero are kept structurally.
    pub fn from_triplets(order: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= order || j >= order {
                return Err(Error::Domain("sparse entry index out of range"));
            }
            if !v.is_finite() {
                return Err(Error::Domain("sparse entry value is not finite"));
            }
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            entries.push((r, c, v));
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        Ok(SparseSymmetric { order, entries: merged })
    }

    pub fn zeros(order: usize) -> Self {
        SparseSymmetric { order, entries: Vec::new() }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    /// Stored lower-triangle entries, sorted by (row, col).
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz_lower(&self) -> usize {
        self.entries.len()
    }

    pub fn max_diag(&self) -> f64 {
        self.entries
            .iter()
            .filter(|(i, j, _)| i == j)
            .fold(0.0_f64, |m, (_, _, v)| m.max(v.abs()))
    }

    pub fn frob_norm(&self) -> f64 {
        let mut s = 0.0;
        for &(i, j, v) in &self.entries {
            s += if i == j { v * v } else { 2.0 * v * v };
        }
        libm::sqrt(s)
    }

    /// `y = A x` using the symmetric structure.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.order);
        assert_eq!(y.len(), self.order);
        y.fill(0.0);
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
    }

    pub fn to_dense(&self) -> SymmetricDense {
        let mut a = SymmetricDense::zeros(self.order);
        for &(i, j, v) in &self.entries {
            a.add_to(i, j, v);
        }
        a
    }

    /// Principal submatrix on the given strictly ascending index set,
    /// re-indexed to `0..keep.len()`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Result<SparseSymmetric> {
        if keep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("index set must be strictly ascending"));
        }
        if let Some(&last) = keep.last() {
            if last >= self.order {
                return Err(Error::Domain("index set exceeds matrix order"));
            }
        }
        let mut map = vec![usize::MAX; self.order];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let mut entries = Vec::new();
        for &(i, j, v) in &self.entries {
            let (ni, nj) = (map[i], map[j]);
            if ni != usize::MAX && nj != usize::MAX {
                entries.push((ni, nj, v));
            }
        }
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Ok(SparseSymmetric { order: keep.len(), entries })
    }

    /// Rectangular slice `A[rows, cols]` as a dense matrix; both index sets
    /// strictly ascending.
    pub fn rect_slice(&self, rows: &[usize], cols: &[usize]) -> Mat {
        let mut rmap = vec![usize::MAX; self.order];
        for (new, &old) in rows.iter().enumerate() {
            rmap[old] = new;
        }
        let mut cmap = vec![usize::MAX; self.order];
        for (new, &old) in cols.iter().enumerate() {
            cmap[old] = new;
        }
        let mut out = Mat::zeros(rows.len(), cols.len());
        for &(i, j, v) in &self.entries {
            // lower-triangle entry (i, j) represents both (i, j) and (j, i)
            if rmap[i] != usize::MAX && cmap[j] != usize::MAX {
                out.set(rmap[i], cmap[j], v);
            }
            if i != j && rmap[j] != usize::MAX && cmap[i] != usize::MAX {
                out.set(rmap[j], cmap[i], v);
            }
        }
        out
    }

    /// `self + c * other` (orders must match).
    pub fn add_scaled(&self, c: f64, other: &SparseSymmetric) -> Result<SparseSymmetric> {
        if self.order != other.order {
            return Err(Error::Domain("matrix orders must match"));
        }
        let mut triplets: Vec<(usize, usize, f64)> = self.entries.clone();
        triplets.extend(other.entries.iter().map(|&(i, j, v)| (i, j, c * v)));
        SparseSymmetric::from_triplets(self.order, &triplets)
    }

    /// Adjacency lists of the off-diagonal structure (symmetric).
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.order];
        for &(i, j, _) in &self.entries {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// True when every stored coordinate of `self` also appears in `other`.
    pub fn pattern_subset_of(&self, other: &SparseSymmetric) -> bool {
        let mut it = other.entries.iter();
        'outer: for &(i, j, _) in &self.entries {
            for &(oi, oj, _) in it.by_ref() {
                match (oi, oj).cmp(&(i, j)) {
                    core::cmp::Ordering::Less => continue,
                    core::cmp::Ordering::Equal => continue 'outer,
                    core::cmp::Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }
}

/// Tall sparse matrix in compressed-row form; rows come in per-element blocks
/// of equal height for stacked factors.
#[derive(Debug, Clone)]
pub struct SparseTall {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseTall {
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            for &(j, v) in row {
                if j >= cols {
                    return Err(Error::Domain("sparse row entry out of range"));
                }
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseTall { rows: rows.len(), cols, row_ptr, col_idx, values })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn to_dense(&self) -> Mat {
        let mut m = Mat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                m.set(i, j, v);
            }
        }
        m
    }

    /// Gram product `F^T F` as a sparse symmetric matrix.
    pub fn gram(&self) -> Result<SparseSymmetric> {
        let mut triplets = Vec::new();
        for i in 0..self.rows {
            let lo = self.row_ptr[i];
            let hi = self.row_ptr[i + 1];
            for a in lo..hi {
                for b in lo..=a {
                    triplets.push((self.col_idx[a], self.col_idx[b], self.values[a] * self.values[b]));
                }
            }
        }
        SparseSymmetric::from_triplets(self.cols, &triplets)
    }
}
