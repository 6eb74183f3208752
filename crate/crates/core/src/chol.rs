//! Sparse LDL^T factorization with a bandwidth-reducing ordering, envelope
//! storage, rank detection by pivot thresholding, and Schur complements.
//!
//! Pivots are taken in the (reverse Cuthill-McKee) elimination order without
//! dynamic regularization: a pivot whose magnitude falls below
//! `PIVOT_REL * max_diagonal` is treated as an exact zero. In ranked mode the
//! pivot is skipped and counted against the expected null-space dimension; in
//! strict mode it is an error carrying the offending index.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{Mat, SymmetricDense};
use crate::error::Error;
use crate::sparse::SparseSymmetric;
use crate::tol;
use crate::Result;

/// Sparse LDL^T factor of a symmetric PSD matrix.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    order: usize,
    /// perm[new] = old index.
    perm: Vec<usize>,
    /// Envelope start column of each (permuted) row.
    first: Vec<usize>,
    /// Row offsets into `env`.
    offsets: Vec<usize>,
    /// Strictly-lower envelope entries of the unit factor L.
    env: Vec<f64>,
    /// Pivots; exactly zero where a pivot was skipped.
    d: Vec<f64>,
    /// Number of positive pivots.
    pub detected_rank: usize,
    /// Null-space dimension the caller declared.
    pub null_dim_expected: usize,
}

#[derive(Clone, Copy, PartialEq)]
enum PivotPolicy {
    /// Zero pivots are skipped and counted.
    Ranked,
    /// Zero (or negative) pivots abort the factorization.
    Strict,
}

/// Ranked factorization for possibly singular PSD matrices: skips deficient
/// pivots and reports the detected rank. `null_dim_expected` is the caller's
/// model null-space dimension `d`; the factor is usable when the rank deficit
/// does not exceed it.
pub fn factor(a: &SparseSymmetric, null_dim_expected: usize) -> Result<CholeskyFactor> {
    factor_impl(a, null_dim_expected, PivotPolicy::Ranked)
}

/// Strict factorization for matrices required to be nonsingular; a deficient
/// pivot is a not-well-formed error naming the original row index.
pub fn factor_strict(a: &SparseSymmetric) -> Result<CholeskyFactor> {
    factor_impl(a, 0, PivotPolicy::Strict)
}

impl CholeskyFactor {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Rank deficit within the declared null-space dimension.
    pub fn usable(&self) -> bool {
        self.order - self.detected_rank <= self.null_dim_expected
    }

    /// Solve `A x = b` on the range: forward/diagonal/backward substitution
    /// with skipped pivots contributing zero.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.order);
        let n = self.order;
        let mut z = vec![0.0; n];
        for i in 0..n {
            z[i] = b[self.perm[i]];
        }
        // L z' = z
        for i in 0..n {
            let fi = self.first[i];
            let off = self.offsets[i];
            let mut s = z[i];
            for (kk, j) in (fi..i).enumerate() {
                s -= self.env[off + kk] * z[j];
            }
            z[i] = s;
        }
        // D
        for i in 0..n {
            if self.d[i] != 0.0 {
                z[i] /= self.d[i];
            } else {
                z[i] = 0.0;
            }
        }
        // L^T x = z
        for i in (0..n).rev() {
            let fi = self.first[i];
            let off = self.offsets[i];
            let xi = z[i];
            if xi != 0.0 {
                for (kk, j) in (fi..i).enumerate() {
                    z[j] -= self.env[off + kk] * xi;
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[self.perm[i]] = z[i];
        }
        x
    }

    /// Multiply by the factored matrix (P^T L D L^T P); test support for the
    /// reconstruction invariant.
    pub fn apply_factored(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order;
        let mut z = vec![0.0; n];
        for i in 0..n {
            z[i] = x[self.perm[i]];
        }
        // w = L^T z by scattering: w_j = z_j + sum_{i > j} L[i][j] z_i.
        let mut w = z.clone();
        for i in 0..n {
            let fi = self.first[i];
            let off = self.offsets[i];
            for (kk, j) in (fi..i).enumerate() {
                w[j] += self.env[off + kk] * z[i];
            }
        }
        for (wi, di) in w.iter_mut().zip(self.d.iter()) {
            *wi *= *di;
        }
        // y = L w
        let mut y = w.clone();
        for i in 0..n {
            let fi = self.first[i];
            let off = self.offsets[i];
            let mut s = y[i];
            for (kk, j) in (fi..i).enumerate() {
                s += self.env[off + kk] * w[j];
            }
            y[i] = s;
        }
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[self.perm[i]] = y[i];
        }
        out
    }
}

/// Reverse Cuthill-McKee ordering of the adjacency structure; deterministic
/// (ties broken by degree then index), one BFS per connected component.
pub fn rcm_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut queue: Vec<usize> = Vec::new();

    loop {
        let mut start = usize::MAX;
        for v in 0..n {
            if !visited[v] && (start == usize::MAX || degree[v] < degree[start]) {
                start = v;
            }
        }
        if start == usize::MAX {
            break;
        }
        visited[start] = true;
        queue.push(start);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            order.push(u);
            let mut nbrs: Vec<usize> =
                adj[u].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                queue.push(w);
            }
        }
        queue.clear();
    }
    order.reverse();
    order
}

fn factor_impl(
    a: &SparseSymmetric,
    null_dim_expected: usize,
    policy: PivotPolicy,
) -> Result<CholeskyFactor> {
    let n = a.order();
    let perm = rcm_order(&a.adjacency());
    let mut iperm = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        iperm[old] = new;
    }

    // Envelope: first[i] = leftmost permuted column coupled to row i.
    let mut first: Vec<usize> = (0..n).collect();
    for &(i, j, _) in a.entries() {
        if i == j {
            continue;
        }
        let (pi, pj) = (iperm[i], iperm[j]);
        let (row, col) = if pi > pj { (pi, pj) } else { (pj, pi) };
        if col < first[row] {
            first[row] = col;
        }
    }
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        offsets[i + 1] = offsets[i] + (i - first[i]);
    }
    let mut env = vec![0.0; offsets[n]];
    let mut d = vec![0.0; n];
    for &(i, j, v) in a.entries() {
        let (pi, pj) = (iperm[i], iperm[j]);
        if pi == pj {
            d[pi] += v;
        } else {
            let (row, col) = if pi > pj { (pi, pj) } else { (pj, pi) };
            env[offsets[row] + (col - first[row])] += v;
        }
    }

    let pivot_tol = tol::PIVOT_REL * a.max_diag().max(tol::EIG_FLOOR);
    let mut detected_rank = 0usize;

    for i in 0..n {
        let fi = first[i];
        let off = offsets[i];
        // Row i of L, left to right.
        for j in fi..i {
            let mut s = env[off + (j - fi)];
            let fj = first[j];
            let offj = offsets[j];
            let lo = fi.max(fj);
            for k in lo..j {
                s -= env[off + (k - fi)] * env[offj + (k - fj)] * d[k];
            }
            env[off + (j - fi)] = if d[j] != 0.0 { s / d[j] } else { 0.0 };
        }
        // Pivot.
        let mut s = d[i];
        for k in fi..i {
            let lik = env[off + (k - fi)];
            s -= lik * lik * d[k];
        }
        if s > pivot_tol {
            d[i] = s;
            detected_rank += 1;
        } else if policy == PivotPolicy::Strict {
            return Err(Error::NotWellFormed { pivot: perm[i] });
        } else if s >= -pivot_tol {
            d[i] = 0.0;
        } else {
            return Err(Error::Indefinite { pivot: perm[i], value: s });
        }
    }

    Ok(CholeskyFactor {
        order: n,
        perm,
        first,
        offsets,
        env,
        d,
        detected_rank,
        null_dim_expected,
    })
}

/// Schur complement of `k` onto `pivot_block` (strictly ascending global
/// indices): eliminates everything else by one strict sparse factorization
/// and one solve per pivot column.
pub fn schur_complement(k: &SparseSymmetric, pivot_block: &[usize]) -> Result<SymmetricDense> {
    let n = k.order();
    if pivot_block.is_empty() {
        return Err(Error::Domain("pivot block must be nonempty"));
    }
    if pivot_block.windows(2).any(|w| w[0] >= w[1]) || *pivot_block.last().unwrap() >= n {
        return Err(Error::Domain("pivot block must be strictly ascending and in range"));
    }

    let mut in_pivot = vec![false; n];
    for &p in pivot_block {
        in_pivot[p] = true;
    }
    let complement: Vec<usize> = (0..n).filter(|&i| !in_pivot[i]).collect();
    let p = pivot_block.len();

    let k22 = k.principal_submatrix(pivot_block)?.to_dense();
    if complement.is_empty() {
        return Ok(k22);
    }

    let k11 = k.principal_submatrix(&complement)?;
    let k12 = k.rect_slice(&complement, pivot_block); // (n-p) x p
    let f = match factor_strict(&k11) {
        Ok(f) => f,
        Err(Error::NotWellFormed { pivot }) => {
            return Err(Error::NotWellFormed { pivot: complement[pivot] })
        }
        Err(e) => return Err(e),
    };

    let mut s = Mat::zeros(p, p);
    let mut col = vec![0.0; complement.len()];
    for j in 0..p {
        for (i, c) in col.iter_mut().enumerate() {
            *c = k12.get(i, j);
        }
        let x = f.solve(&col);
        for a in 0..p {
            let mut acc = k22.get(a, j);
            for (i, xi) in x.iter().enumerate() {
                acc -= k12.get(i, a) * xi;
            }
            s.set(a, j, acc);
        }
    }
    Ok(SymmetricDense::symmetrized(&s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3_laplacian() -> SparseSymmetric {
        SparseSymmetric::from_triplets(
            3,
            &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 1.0), (1, 0, -1.0), (2, 1, -1.0)],
        )
        .unwrap()
    }

    fn cycle3_laplacian() -> SparseSymmetric {
        SparseSymmetric::from_triplets(
            3,
            &[
                (0, 0, 2.0),
                (1, 1, 2.0),
                (2, 2, 2.0),
                (1, 0, -1.0),
                (2, 0, -1.0),
                (2, 1, -1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_factor() {
        let a = SparseSymmetric::from_triplets(
            5,
            &(0..5).map(|i| (i, i, 1.0)).collect::<Vec<_>>(),
        )
        .unwrap();
        let f = factor(&a, 0).unwrap();
        assert_eq!(f.detected_rank, 5);
        assert!(f.usable());
        let x = f.solve(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(x, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn laplacian_rank_and_solve() {
        let l = p3_laplacian();
        let f = factor(&l, 1).unwrap();
        assert_eq!(f.detected_rank, 2);
        assert!(f.usable());
        // Consistent rhs: b = (1, 0, -1) is orthogonal to the all-ones null.
        let x = f.solve(&[1.0, 0.0, -1.0]);
        let mut y = vec![0.0; 3];
        l.matvec(&x, &mut y);
        assert!((y[0] - 1.0).abs() < 1e-12 && y[1].abs() < 1e-12 && (y[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn disconnected_laplacian_rank_deficit_two() {
        // Two disjoint edges on 4 nodes.
        let l = SparseSymmetric::from_triplets(
            4,
            &[
                (0, 0, 1.0),
                (1, 1, 1.0),
                (1, 0, -1.0),
                (2, 2, 1.0),
                (3, 3, 1.0),
                (3, 2, -1.0),
            ],
        )
        .unwrap();
        let f = factor(&l, 1).unwrap();
        assert_eq!(f.detected_rank, 2);
        assert!(!f.usable());
    }

    #[test]
    fn strict_mode_errors_on_singular() {
        let l = p3_laplacian();
        match factor_strict(&l) {
            Err(Error::NotWellFormed { .. }) => {}
            other => panic!("expected strict breakdown, got {other:?}"),
        }
    }

    #[test]
    fn reconstruction_matches_input() {
        let l = cycle3_laplacian();
        let f = factor(&l, 1).unwrap();
        for unit in 0..3 {
            let mut e = vec![0.0; 3];
            e[unit] = 1.0;
            let got = f.apply_factored(&e);
            let mut want = vec![0.0; 3];
            l.matvec(&e, &mut want);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn schur_diagonal_no_coupling() {
        let k = SparseSymmetric::from_triplets(
            3,
            &[(0, 0, 2.0), (1, 1, 3.0), (2, 2, 5.0)],
        )
        .unwrap();
        let s = schur_complement(&k, &[2]).unwrap();
        assert_eq!(s.order(), 1);
        assert!((s.get(0, 0) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn schur_bridge_edge_p3() {
        // Eliminating the third node of the path leaves the bridge edge's
        // effective stiffness R^{-1} (e1-e2)(e1-e2)^T with R = 1.
        let s = schur_complement(&p3_laplacian(), &[0, 1]).unwrap();
        assert!((s.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((s.get(1, 1) - 1.0).abs() < 1e-12);
        assert!((s.get(0, 1) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn schur_cycle_edge() {
        let s = schur_complement(&cycle3_laplacian(), &[0, 1]).unwrap();
        assert!((s.get(0, 0) - 1.5).abs() < 1e-12);
        assert!((s.get(1, 1) - 1.5).abs() < 1e-12);
        assert!((s.get(0, 1) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn schur_whole_matrix_is_identity_case() {
        let k = cycle3_laplacian();
        let s = schur_complement(&k, &[0, 1, 2]).unwrap();
        let d = k.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert!((s.get(i, j) - d.get(i, j)).abs() < 1e-15);
            }
        }
    }

    // Dense Gauss-Jordan inverse, independent oracle for the Schur formula.
    fn dense_inverse(a: &Mat) -> Mat {
        let n = a.rows();
        let mut work = a.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let mut piv = col;
            for r in (col + 1)..n {
                if work.get(r, col).abs() > work.get(piv, col).abs() {
                    piv = r;
                }
            }
            for j in 0..n {
                let tmp = work.get(col, j);
                work.set(col, j, work.get(piv, j));
                work.set(piv, j, tmp);
                let tmp = inv.get(col, j);
                inv.set(col, j, inv.get(piv, j));
                inv.set(piv, j, tmp);
            }
            let p = work.get(col, col);
            assert!(p.abs() > 1e-14, "oracle inverse hit a zero pivot");
            for j in 0..n {
                work.set(col, j, work.get(col, j) / p);
                inv.set(col, j, inv.get(col, j) / p);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = work.get(r, col);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    work.set(r, j, work.get(r, j) - f * work.get(col, j));
                    inv.set(r, j, inv.get(r, j) - f * inv.get(col, j));
                }
            }
        }
        inv
    }

    #[test]
    fn schur_matches_dense_formula() {
        // Random-ish SPD matrix of order 12, pivot block {2, 5, 9}.
        let n = 12;
        let mut b = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                b.set(i, j, libm::sin((1 + i * n + j) as f64) * 0.4);
            }
        }
        let spd = {
            let mut g = b.gram();
            for i in 0..n {
                g.add_to(i, i, (n as f64) * 0.5);
            }
            g
        };
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..=i {
                triplets.push((i, j, spd.get(i, j)));
            }
        }
        let k = SparseSymmetric::from_triplets(n, &triplets).unwrap();
        let pivot = [2usize, 5, 9];
        let s = schur_complement(&k, &pivot).unwrap();

        let comp: Vec<usize> = (0..n).filter(|i| !pivot.contains(i)).collect();
        let k11 = k.principal_submatrix(&comp).unwrap().to_dense().to_full();
        let k12 = k.rect_slice(&comp, &pivot);
        let k22 = k.principal_submatrix(&pivot).unwrap().to_dense().to_full();
        let k11_inv = dense_inverse(&k11);
        let oracle = {
            let t = k12.transpose_matmul(&k11_inv.matmul(&k12));
            let mut o = Mat::zeros(pivot.len(), pivot.len());
            for i in 0..pivot.len() {
                for j in 0..pivot.len() {
                    o.set(i, j, k22.get(i, j) - t.get(i, j));
                }
            }
            o
        };
        for i in 0..pivot.len() {
            for j in 0..pivot.len() {
                let rel = (s.get(i, j) - oracle.get(i, j)).abs()
                    / oracle.get(i, j).abs().max(1.0);
                assert!(rel < 1e-9, "schur mismatch at ({i},{j})");
            }
        }
    }
}
