//! The algebraic-combinatorial element model: element matrices, assemblies,
//! factored forms, well-formedness checks, the rigidity graph, and submodel
//! extraction.
//!
//! An assembly is a global dimension `n`, a list of element matrices (each a
//! small symmetric PSD block living on an ascending set of global indices),
//! a declared null-space basis `N`, and the uniform element rank `r` and
//! null-space dimension `d`. The global stiffness matrix is the sum of the
//! scattered element blocks.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{Mat, SymmetricDense};
use crate::eig::sym_eig;
use crate::error::Error;
use crate::qr::QrFactors;
use crate::rng::Xoshiro256StarStar;
use crate::sparse::{SparseSymmetric, SparseTall};
use crate::tol;
use crate::{chol, Result};

/// One element: its dense essential matrix and global index set, plus the
/// optional factored form `F_e^T F_e = K_e`.
#[derive(Debug, Clone)]
pub struct ElementMatrix {
    pub id: usize,
    /// Strictly ascending global indices (the element's nonzero rows).
    pub nodes: Vec<usize>,
    pub k_tilde: SymmetricDense,
    /// `r x n_e` factor, if computed or supplied.
    pub factor: Option<Mat>,
}

impl ElementMatrix {
    pub fn new(id: usize, nodes: Vec<usize>, k_tilde: SymmetricDense) -> Self {
        ElementMatrix { id, nodes, k_tilde, factor: None }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }
}

/// The full finite-element model.
#[derive(Debug, Clone)]
pub struct Assembly {
    n: usize,
    elements: Vec<ElementMatrix>,
    null_basis: Mat,
    r: usize,
    d: usize,
}

/// Outcome of the well-formedness check; all three flags must hold for the
/// leverage machinery to apply.
#[derive(Debug, Clone)]
pub struct WellFormedReport {
    pub nullspace_ok: bool,
    pub compatibility_ok: bool,
    pub minimal_rank_ok: bool,
    pub diagnostics: Vec<String>,
}

impl WellFormedReport {
    pub fn all_ok(&self) -> bool {
        self.nullspace_ok && self.compatibility_ok && self.minimal_rank_ok
    }
}

/// Element adjacency by shared global indices.
#[derive(Debug, Clone)]
pub struct RigidityGraph {
    pub m: usize,
    pub adjacency: Vec<Vec<usize>>,
    pub min_shared: usize,
}

impl RigidityGraph {
    /// BFS ball of the given radius around an element, itself included,
    /// sorted ascending.
    pub fn ball(&self, element: usize, radius: usize) -> Result<Vec<usize>> {
        if element >= self.m {
            return Err(Error::Domain("unknown element id"));
        }
        let mut dist = vec![usize::MAX; self.m];
        dist[element] = 0;
        let mut queue = vec![element];
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            if dist[u] == radius {
                continue;
            }
            for &w in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push(w);
                }
            }
        }
        queue.sort_unstable();
        Ok(queue)
    }
}

impl Assembly {
    /// Validates and builds. Enforced here so every `Assembly` in the system
    /// satisfies the model invariants: ascending node sets in range,
    /// sequential ids, symmetric PSD elements of the declared rank, a
    /// full-column-rank null basis, and factors (when present) that
    /// reconstruct their element.
    pub fn new(
        n: usize,
        elements: Vec<ElementMatrix>,
        null_basis: Mat,
        r: usize,
        d: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Model { element: None, reason: "global dimension must be positive".into() });
        }
        if r == 0 {
            return Err(Error::Model { element: None, reason: "element rank must be positive".into() });
        }
        if null_basis.rows() != n || null_basis.cols() != d {
            return Err(Error::Model {
                element: None,
                reason: format!(
                    "null basis must be {n} x {d}, got {} x {}",
                    null_basis.rows(),
                    null_basis.cols()
                ),
            });
        }
        if d > 0 {
            let rank = QrFactors::new(null_basis.clone()).rank();
            if rank != d {
                return Err(Error::Model {
                    element: None,
                    reason: format!("null basis has column rank {rank}, expected {d}"),
                });
            }
        }
        for (pos, e) in elements.iter().enumerate() {
            let reject = |reason: String| Error::Model { element: Some(e.id), reason };
            if e.id != pos {
                return Err(reject(format!("element ids must be sequential, found {} at {pos}", e.id)));
            }
            if e.nodes.is_empty() {
                return Err(reject("element has no nodes".into()));
            }
            if e.nodes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(reject("node indices must be strictly ascending".into()));
            }
            if *e.nodes.last().unwrap() >= n {
                return Err(reject("node index out of range".into()));
            }
            if e.k_tilde.order() != e.nodes.len() {
                return Err(reject("essential matrix order does not match node count".into()));
            }
            let eig = sym_eig(&e.k_tilde, tol::REL_RANK)?;
            let lam_max = eig.values[0].max(tol::EIG_FLOOR);
            if *eig.values.last().unwrap() < -tol::REL_RANK * lam_max {
                return Err(reject("essential matrix is not positive semidefinite".into()));
            }
            if eig.rank != r {
                return Err(reject(format!("element rank {} differs from declared r = {r}", eig.rank)));
            }
            if let Some(f) = &e.factor {
                if f.rows() != r || f.cols() != e.nodes.len() {
                    return Err(reject("factor shape must be r x n_e".into()));
                }
                let rec = f.gram();
                let err = rec.sub(&e.k_tilde).frob_norm();
                if err > 1e-9 * e.k_tilde.frob_norm().max(tol::EIG_FLOOR) {
                    return Err(reject("factor does not reconstruct the element".into()));
                }
            }
        }
        Ok(Assembly { n, elements, null_basis, r, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.elements.len()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn elements(&self) -> &[ElementMatrix] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> Result<&ElementMatrix> {
        self.elements.get(id).ok_or(Error::Domain("unknown element id"))
    }

    pub fn null_basis(&self) -> &Mat {
        &self.null_basis
    }

    /// Global sparse stiffness matrix `K = sum K_e`.
    pub fn assemble(&self) -> SparseSymmetric {
        let mut triplets = Vec::new();
        for e in &self.elements {
            let ne = e.nodes.len();
            for li in 0..ne {
                for lj in 0..=li {
                    triplets.push((e.nodes[li], e.nodes[lj], e.k_tilde.get(li, lj)));
                }
            }
        }
        SparseSymmetric::from_triplets(self.n, &triplets)
            .expect("validated element indices cannot be out of range")
    }

    /// Fill missing factors from the eigendecomposition route.
    pub fn factor_all(&mut self, rel_tol: f64) -> Result<()> {
        for pos in 0..self.elements.len() {
            if self.elements[pos].factor.is_none() {
                let f = factor_element(&self.elements[pos], self.r, rel_tol)?;
                self.elements[pos].factor = Some(f);
            }
        }
        Ok(())
    }

    /// Stacked global factor `F` (one `r`-row block per element scattered to
    /// its global columns), with `F^T F = assemble()`.
    pub fn build_global_factor(&self) -> Result<SparseTall> {
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.m() * self.r);
        for e in &self.elements {
            let f = e.factor.as_ref().ok_or(Error::Model {
                element: Some(e.id),
                reason: "element has no factor; call factor_all first".into(),
            })?;
            for row in 0..self.r {
                rows.push(
                    e.nodes
                        .iter()
                        .enumerate()
                        .map(|(c, &node)| (node, f.get(row, c)))
                        .collect(),
                );
            }
        }
        SparseTall::from_rows(self.n, rows)
    }

    /// Element adjacency: two elements are neighbors when they share at
    /// least `min_shared` global indices.
    pub fn rigidity_graph(&self, min_shared: usize) -> Result<RigidityGraph> {
        if min_shared == 0 {
            return Err(Error::Domain("min_shared must be at least 1"));
        }
        let m = self.m();
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for e in &self.elements {
            for &node in &e.nodes {
                incident[node].push(e.id);
            }
        }
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut shared_count = vec![0usize; m];
        let mut touched: Vec<usize> = Vec::new();
        for e in &self.elements {
            for &node in &e.nodes {
                for &other in &incident[node] {
                    if other == e.id {
                        continue;
                    }
                    if shared_count[other] == 0 {
                        touched.push(other);
                    }
                    shared_count[other] += 1;
                }
            }
            let mut nbrs: Vec<usize> = touched
                .iter()
                .copied()
                .filter(|&o| shared_count[o] >= min_shared)
                .collect();
            nbrs.sort_unstable();
            adjacency[e.id] = nbrs;
            for &o in &touched {
                shared_count[o] = 0;
            }
            touched.clear();
        }
        Ok(RigidityGraph { m, adjacency, min_shared })
    }

    /// Restriction to a subset of elements on the union of their indices,
    /// compacted; returns the new assembly and the map from local back to
    /// global indices.
    pub fn submodel(&self, subset: &[usize]) -> Result<(Assembly, Vec<usize>)> {
        if subset.is_empty() {
            return Err(Error::Domain("submodel subset must be nonempty"));
        }
        let mut ids: Vec<usize> = subset.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if *ids.last().unwrap() >= self.m() {
            return Err(Error::Domain("unknown element id in subset"));
        }

        let mut kept_nodes: Vec<usize> = Vec::new();
        for &id in &ids {
            kept_nodes.extend_from_slice(&self.elements[id].nodes);
        }
        kept_nodes.sort_unstable();
        kept_nodes.dedup();
        let mut node_map = vec![usize::MAX; self.n];
        for (local, &global) in kept_nodes.iter().enumerate() {
            node_map[global] = local;
        }

        let mut elements = Vec::with_capacity(ids.len());
        for (new_id, &id) in ids.iter().enumerate() {
            let e = &self.elements[id];
            elements.push(ElementMatrix {
                id: new_id,
                nodes: e.nodes.iter().map(|&g| node_map[g]).collect(),
                k_tilde: e.k_tilde.clone(),
                factor: e.factor.clone(),
            });
        }

        let mut null_basis = Mat::zeros(kept_nodes.len(), self.d);
        for (local, &global) in kept_nodes.iter().enumerate() {
            for c in 0..self.d {
                null_basis.set(local, c, self.null_basis.get(global, c));
            }
        }

        let sub = Assembly::new(kept_nodes.len(), elements, null_basis, self.r, self.d)?;
        Ok((sub, kept_nodes))
    }

    /// Dirichlet variant: remove the given global indices (ascending) from
    /// the model entirely. Elements losing all indices are dropped; the
    /// survivors must keep rank `r`, which constrains the choice of pinned
    /// indices. The result has `d = 0` and an empty null basis.
    pub fn pin(&self, pinned: &[usize]) -> Result<(Assembly, Vec<usize>)> {
        if pinned.is_empty() {
            return Err(Error::Domain("pin set must be nonempty"));
        }
        if pinned.windows(2).any(|w| w[0] >= w[1]) || *pinned.last().unwrap() >= self.n {
            return Err(Error::Domain("pin set must be strictly ascending and in range"));
        }
        let mut is_pinned = vec![false; self.n];
        for &p in pinned {
            is_pinned[p] = true;
        }
        let kept: Vec<usize> = (0..self.n).filter(|&i| !is_pinned[i]).collect();
        let mut node_map = vec![usize::MAX; self.n];
        for (local, &global) in kept.iter().enumerate() {
            node_map[global] = local;
        }

        let mut elements = Vec::new();
        for e in &self.elements {
            let keep_local: Vec<usize> =
                (0..e.nodes.len()).filter(|&li| !is_pinned[e.nodes[li]]).collect();
            if keep_local.is_empty() {
                continue;
            }
            let nodes: Vec<usize> = keep_local.iter().map(|&li| node_map[e.nodes[li]]).collect();
            let mut k = SymmetricDense::zeros(keep_local.len());
            for (a, &la) in keep_local.iter().enumerate() {
                for (b, &lb) in keep_local.iter().enumerate().take(a + 1) {
                    k.set(a, b, e.k_tilde.get(la, lb));
                }
            }
            elements.push(ElementMatrix::new(elements.len(), nodes, k));
        }
        let sub = Assembly::new(kept.len(), elements, Mat::zeros(kept.len(), 0), self.r, 0)?;
        Ok((sub, kept))
    }

    /// Well-formedness: the declared null space is exactly `K`'s kernel,
    /// every element is compatible with it, and the factor has minimal rank
    /// deficiency (checked probabilistically with `trials` random draws).
    pub fn check_well_formed(&self, trials: usize, seed: u64) -> WellFormedReport {
        let mut diagnostics = Vec::new();
        let k = self.assemble();

        // Null space: rank(K) = n - d and K N = 0.
        let mut nullspace_ok = true;
        match chol::factor(&k, self.d) {
            Ok(f) => {
                if f.detected_rank != self.n - self.d {
                    nullspace_ok = false;
                    diagnostics.push(format!(
                        "rank deficit: rank(K) = {} but n - d = {}",
                        f.detected_rank,
                        self.n - self.d
                    ));
                }
            }
            Err(e) => {
                nullspace_ok = false;
                diagnostics.push(format!("stiffness factorization failed: {e}"));
            }
        }
        let k_norm = k.frob_norm().max(tol::EIG_FLOOR);
        for c in 0..self.d {
            let col: Vec<f64> = (0..self.n).map(|i| self.null_basis.get(i, c)).collect();
            let col_norm = crate::dense::norm2(&col).max(tol::EIG_FLOOR);
            let mut out = vec![0.0; self.n];
            k.matvec(&col, &mut out);
            let res = crate::dense::norm2(&out);
            if res > 1e-8 * k_norm * col_norm {
                nullspace_ok = false;
                diagnostics.push(format!(
                    "null basis column {c} is not annihilated: |K n_c| = {res:e}"
                ));
            }
        }

        // Compatibility: for every element, the essential null space equals
        // the restriction of range(N), tested by ranks and annihilation.
        let mut compatibility_ok = true;
        for e in &self.elements {
            let ne = e.nodes.len();
            let mut n_e = Mat::zeros(ne, self.d);
            for (li, &g) in e.nodes.iter().enumerate() {
                for c in 0..self.d {
                    n_e.set(li, c, self.null_basis.get(g, c));
                }
            }
            if ne != self.r + self.d {
                compatibility_ok = false;
                diagnostics.push(format!(
                    "element {}: null dimension {} differs from d = {}",
                    e.id,
                    ne - self.r,
                    self.d
                ));
                continue;
            }
            if self.d == 0 {
                continue;
            }
            let restricted_rank = QrFactors::new(n_e.clone()).rank();
            if restricted_rank != self.d {
                compatibility_ok = false;
                diagnostics.push(format!(
                    "element {}: restricted null basis has rank {restricted_rank}, expected {}",
                    e.id, self.d
                ));
                continue;
            }
            let prod = e.k_tilde.to_full().matmul(&n_e);
            let scale = e.k_tilde.frob_norm().max(tol::EIG_FLOOR) * n_e.frob_norm().max(tol::EIG_FLOOR);
            if prod.frob_norm() > 1e-8 * scale {
                compatibility_ok = false;
                diagnostics.push(format!(
                    "element {}: essential matrix does not annihilate the restricted null basis",
                    e.id
                ));
            }
        }

        // Minimal rank deficiency, probabilistically. For scalar null spaces
        // the textbook form holds: random (n - d)-index principal submatrices
        // of K must be nonsingular (the Gram identity makes this the
        // column-independence test on F). For vector-valued null spaces that
        // form is unsatisfiable — a pure coordinate translation vanishes on
        // every subset of same-type indices — so the trials instead exercise
        // what elimination actually needs: the complement block of a random
        // element must factor strictly.
        let mut rng = Xoshiro256StarStar::from_seed(seed);
        let mut f_subsets_ok = true;
        if self.d == 0 {
            if chol::factor_strict(&k).is_err() {
                f_subsets_ok = false;
                diagnostics.push("K itself is singular".into());
            }
        } else if self.d == 1 {
            for trial in 0..trials {
                let excluded = sample_distinct(&mut rng, self.d, self.n);
                let mut drop = vec![false; self.n];
                for &x in &excluded {
                    drop[x] = true;
                }
                let keep: Vec<usize> = (0..self.n).filter(|&i| !drop[i]).collect();
                let sub = k
                    .principal_submatrix(&keep)
                    .expect("index subset is ascending by construction");
                if chol::factor_strict(&sub).is_err() {
                    f_subsets_ok = false;
                    diagnostics.push(format!(
                        "trial {trial}: a {}-column subset of F is rank deficient",
                        self.n - self.d
                    ));
                    break;
                }
            }
        } else {
            for trial in 0..trials {
                let e = &self.elements[rng.next_index(self.m())];
                let mut drop = vec![false; self.n];
                for &node in &e.nodes {
                    drop[node] = true;
                }
                let keep: Vec<usize> = (0..self.n).filter(|&i| !drop[i]).collect();
                if keep.is_empty() {
                    continue;
                }
                let sub = k
                    .principal_submatrix(&keep)
                    .expect("index subset is ascending by construction");
                if chol::factor_strict(&sub).is_err() {
                    f_subsets_ok = false;
                    diagnostics.push(format!(
                        "trial {trial}: elimination block of element {} is singular",
                        e.id
                    ));
                    break;
                }
            }
        }
        let mut n_dets_ok = true;
        if self.d > 0 {
            for trial in 0..trials {
                let rows = sample_distinct(&mut rng, self.d, self.n);
                let mut sub = Mat::zeros(self.d, self.d);
                for (a, &row) in rows.iter().enumerate() {
                    for c in 0..self.d {
                        sub.set(a, c, self.null_basis.get(row, c));
                    }
                }
                let det = small_det(&sub);
                let mut scale = 1.0;
                for a in 0..self.d {
                    scale *= crate::dense::norm2(sub.row(a)).max(tol::EIG_FLOOR);
                }
                if det.abs() <= 1e-12 * scale {
                    n_dets_ok = false;
                    diagnostics.push(format!(
                        "trial {trial}: singular {0} x {0} submatrix of N (rows {rows:?})",
                        self.d
                    ));
                    break;
                }
            }
        }
        if self.d > 1 && !n_dets_ok {
            diagnostics.push(
                "determinant route is informational for d > 1; flag follows the column-subset test"
                    .into(),
            );
        }
        let minimal_rank_ok = f_subsets_ok && (self.d > 1 || n_dets_ok);

        WellFormedReport { nullspace_ok, compatibility_ok, minimal_rank_ok, diagnostics }
    }
}

/// Factored form of one element: `r` rows with `F^T F = k_tilde`, from the
/// eigendecomposition. Errors when the element's rank is not the declared `r`.
pub fn factor_element(e: &ElementMatrix, r: usize, rel_tol: f64) -> Result<Mat> {
    let eig = sym_eig(&e.k_tilde, rel_tol)?;
    if eig.rank != r {
        return Err(Error::Model {
            element: Some(e.id),
            reason: format!("element rank {} differs from declared r = {r}", eig.rank),
        });
    }
    let ne = e.k_tilde.order();
    let mut f = Mat::zeros(r, ne);
    for row in 0..r {
        let s = libm::sqrt(eig.values[row]);
        for c in 0..ne {
            f.set(row, c, s * eig.vectors.get(c, row));
        }
    }
    Ok(f)
}

fn sample_distinct(rng: &mut Xoshiro256StarStar, count: usize, bound: usize) -> Vec<usize> {
    debug_assert!(count <= bound);
    let mut picked: Vec<usize> = Vec::with_capacity(count);
    while picked.len() < count {
        let x = rng.next_index(bound);
        if !picked.contains(&x) {
            picked.push(x);
        }
    }
    picked
}

// Determinant by Gaussian elimination with partial pivoting; the submatrices
// here are d x d with d small.
fn small_det(a: &Mat) -> f64 {
    let n = a.rows();
    let mut work = a.clone();
    let mut det = 1.0;
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if work.get(r, col).abs() > work.get(piv, col).abs() {
                piv = r;
            }
        }
        if piv != col {
            for j in 0..n {
                let tmp = work.get(col, j);
                work.set(col, j, work.get(piv, j));
                work.set(piv, j, tmp);
            }
            det = -det;
        }
        let p = work.get(col, col);
        if p == 0.0 {
            return 0.0;
        }
        det *= p;
        for r in (col + 1)..n {
            let f = work.get(r, col) / p;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                work.set(r, j, work.get(r, j) - f * work.get(col, j));
            }
        }
    }
    det
}
