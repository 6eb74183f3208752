//! Effective stiffness and element leverages.
//!
//! The leverage of an element is the largest generalized eigenvalue of its
//! essential matrix against its effective stiffness (the Schur complement of
//! the assembled matrix onto the element's indices). It always lies in
//! (0, 1], equals `w_e R_e` for graph Laplacians, and drives the sampling
//! probabilities. Four routes are implemented:
//!
//! - `exact-schur`: per-element Schur complement plus a small pencil solve;
//! - `exact-qr`: one thin QR of the stacked factor yields all leverages;
//! - `removal`: the condition-number identity
//!   `tau_e = (kappa(K, K - K_e) - 1) / kappa(K, K - K_e)` (dense; a
//!   verification route, gated to order 2000);
//! - `local`: the Schur complement inside a radius-limited submodel, an
//!   upper bound by Rayleigh monotonicity, with a safe fallback of 1.

use alloc::vec::Vec;

use crate::chol::schur_complement;
use crate::dense::SymmetricDense;
use crate::eig::sym_eig;
use crate::error::Error;
use crate::model::{Assembly, RigidityGraph};
use crate::pencil::{pencil_eigs, pencil_eigs_with_b, PencilSpectrum};
use crate::qr::thin_qr;
use crate::sparse::SparseSymmetric;
use crate::tol;
use crate::Result;

/// Size gate for the dense removal route.
pub const REMOVAL_ORDER_LIMIT: usize = 2000;

/// How a leverage value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeverageMethod {
    ExactSchur,
    ExactQr,
    Removal,
    Local { radius: usize },
}

impl LeverageMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            LeverageMethod::ExactSchur => "exact-schur",
            LeverageMethod::ExactQr => "exact-qr",
            LeverageMethod::Removal => "removal",
            LeverageMethod::Local { .. } => "local",
        }
    }

    pub fn radius(&self) -> Option<usize> {
        match self {
            LeverageMethod::Local { radius } => Some(*radius),
            _ => None,
        }
    }

    /// Exact methods obey the total-leverage bracket of the theory;
    /// local values are upper bounds only.
    pub fn is_exact(&self) -> bool {
        !matches!(self, LeverageMethod::Local { .. })
    }
}

/// One element's leverage.
#[derive(Debug, Clone, Copy)]
pub struct LeverageRecord {
    pub element_id: usize,
    pub tau: f64,
    pub method: LeverageMethod,
}

/// Per-element leverages plus their sum.
#[derive(Debug, Clone)]
pub struct LeverageTable {
    pub records: Vec<LeverageRecord>,
    pub total: f64,
}

impl LeverageTable {
    pub fn from_records(records: Vec<LeverageRecord>) -> Self {
        let total = records.iter().map(|r| r.tau).sum();
        LeverageTable { records, total }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The bracket `(n - d)/r <= total <= n - d` that exact totals satisfy.
    pub fn exact_bracket(n: usize, d: usize, r: usize) -> (f64, f64) {
        (((n - d) as f64) / r as f64, (n - d) as f64)
    }
}

/// The effective stiffness of one element.
#[derive(Debug, Clone)]
pub struct EffectiveStiffness {
    pub element_id: usize,
    pub matrix: SymmetricDense,
}

/// Shared state for batch leverage computation: the assembled matrix and,
/// per method, the rigidity graph or the dense stiffness matrix.
pub struct LeverageContext<'a> {
    pub assembly: &'a Assembly,
    pub matrix: SparseSymmetric,
    graph: Option<RigidityGraph>,
    dense: Option<SymmetricDense>,
}

/// Default node-sharing threshold for the rigidity graph: 2 for planar
/// elasticity (indices come in coordinate pairs), 1 for scalar problems.
pub fn default_min_shared(r: usize, d: usize) -> usize {
    if r == 3 && d == 3 {
        2
    } else {
        1
    }
}

impl<'a> LeverageContext<'a> {
    pub fn prepare(assembly: &'a Assembly, method: LeverageMethod) -> Result<Self> {
        let matrix = assembly.assemble();
        let graph = match method {
            LeverageMethod::Local { .. } => Some(
                assembly.rigidity_graph(default_min_shared(assembly.r(), assembly.d()))?,
            ),
            _ => None,
        };
        let dense = match method {
            LeverageMethod::Removal => {
                if assembly.n() > REMOVAL_ORDER_LIMIT {
                    return Err(Error::SizeGate { limit: REMOVAL_ORDER_LIMIT, got: assembly.n() });
                }
                Some(matrix.to_dense())
            }
            _ => None,
        };
        Ok(LeverageContext { assembly, matrix, graph, dense })
    }

    /// Use an explicit rigidity graph instead of the default construction.
    pub fn with_graph(mut self, graph: RigidityGraph) -> Self {
        self.graph = Some(graph);
        self
    }

    pub fn graph(&self) -> Option<&RigidityGraph> {
        self.graph.as_ref()
    }

    /// Leverage of one element by the prepared method.
    pub fn leverage_of(&self, element: usize, method: LeverageMethod) -> Result<f64> {
        match method {
            LeverageMethod::ExactSchur => exact_schur_with(self.assembly, &self.matrix, element),
            LeverageMethod::Removal => removal_with(
                self.assembly,
                self.dense.as_ref().ok_or(Error::Domain("context not prepared for removal"))?,
                element,
            ),
            LeverageMethod::Local { radius } => local_with(
                self.assembly,
                self.graph.as_ref().ok_or(Error::Domain("context not prepared for local"))?,
                element,
                radius,
            ),
            LeverageMethod::ExactQr => {
                Err(Error::Domain("exact-qr is a whole-table route; use leverage_table"))
            }
        }
    }
}

/// Effective stiffness `S_e`: the Schur complement of the assembled matrix
/// onto the element's (ascending) index set.
pub fn effective_stiffness(assembly: &Assembly, element: usize) -> Result<EffectiveStiffness> {
    let k = assembly.assemble();
    effective_stiffness_with(assembly, &k, element)
}

/// As `effective_stiffness` with a pre-assembled matrix.
pub fn effective_stiffness_with(
    assembly: &Assembly,
    k: &SparseSymmetric,
    element: usize,
) -> Result<EffectiveStiffness> {
    let e = assembly.element(element)?;
    let matrix = schur_complement(k, &e.nodes)?;
    Ok(EffectiveStiffness { element_id: element, matrix })
}

/// Exact leverage from the Schur-complement route.
pub fn leverage_exact_schur(assembly: &Assembly, element: usize) -> Result<f64> {
    let k = assembly.assemble();
    exact_schur_with(assembly, &k, element)
}

fn exact_schur_with(assembly: &Assembly, k: &SparseSymmetric, element: usize) -> Result<f64> {
    let e = assembly.element(element)?;
    let s = schur_complement(k, &e.nodes)?;
    let spec = pencil_eigs(&e.k_tilde, &s, tol::REL_RANK)?;
    Ok(clamp_tau(spec.lambda_max()))
}

/// All exact leverages from one thin QR of the stacked global factor:
/// `tau_e` is the largest eigenvalue of `Q_e Q_e^T` over the element's
/// `r`-row block of the orthonormal basis. Requires factored elements.
pub fn leverage_exact_qr(assembly: &Assembly) -> Result<LeverageTable> {
    let f = assembly.build_global_factor()?;
    let expected = assembly.n() - assembly.d();
    let (q, _r) = thin_qr(&f, expected)?;
    let r = assembly.r();
    let mut records = Vec::with_capacity(assembly.m());
    for e in 0..assembly.m() {
        let block = q.slice_rows(e * r, (e + 1) * r);
        let gram = block.outer_gram(); // r x r
        let eig = sym_eig(&gram, tol::REL_RANK)?;
        records.push(LeverageRecord {
            element_id: e,
            tau: clamp_tau(eig.values[0]),
            method: LeverageMethod::ExactQr,
        });
    }
    Ok(LeverageTable::from_records(records))
}

/// Leverage from the removal identity: 1 when deleting the element drops the
/// rank, otherwise `(kappa - 1)/kappa` for `kappa = kappa(K, K - K_e)`.
/// Densifies the stiffness matrix; verification route.
pub fn leverage_via_removal(assembly: &Assembly, element: usize) -> Result<f64> {
    if assembly.n() > REMOVAL_ORDER_LIMIT {
        return Err(Error::SizeGate { limit: REMOVAL_ORDER_LIMIT, got: assembly.n() });
    }
    let dense = assembly.assemble().to_dense();
    removal_with(assembly, &dense, element)
}

fn removal_with(assembly: &Assembly, k_dense: &SymmetricDense, element: usize) -> Result<f64> {
    let e = assembly.element(element)?;
    let mut without = k_dense.clone();
    let ne = e.nodes.len();
    for li in 0..ne {
        for lj in 0..=li {
            without.add_to(e.nodes[li], e.nodes[lj], -e.k_tilde.get(li, lj));
        }
    }
    let eig_without = sym_eig(&without, tol::REL_RANK)?;
    let full_rank = assembly.n() - assembly.d();
    if eig_without.rank < full_rank {
        return Ok(1.0);
    }
    let spec = pencil_eigs_with_b(k_dense, &eig_without, tol::REL_RANK)?;
    let kappa = spec.kappa();
    Ok(clamp_tau((kappa - 1.0) / kappa))
}

/// Radius-limited upper bound: the exact formulas applied inside the
/// submodel spanned by the rigidity-graph ball around the element. Any
/// degeneracy of the submodel (singular eliminated block, local pencil
/// mismatch) falls back to 1, which is always a valid upper bound.
pub fn leverage_local(
    assembly: &Assembly,
    graph: &RigidityGraph,
    element: usize,
    radius: usize,
) -> Result<f64> {
    if radius == 0 {
        return Err(Error::Domain("local leverage radius must be at least 1"));
    }
    if element >= assembly.m() {
        return Err(Error::Domain("unknown element id"));
    }
    local_with(assembly, graph, element, radius)
}

fn local_with(
    assembly: &Assembly,
    graph: &RigidityGraph,
    element: usize,
    radius: usize,
) -> Result<f64> {
    if radius == 0 {
        return Err(Error::Domain("local leverage radius must be at least 1"));
    }
    let ball = graph.ball(element, radius)?;
    let local = (|| -> Result<f64> {
        let (sub, _map) = assembly.submodel(&ball)?;
        let local_id = ball.binary_search(&element).expect("ball contains its center");
        let k_local = sub.assemble();
        let e = sub.element(local_id)?;
        let s_hat = schur_complement(&k_local, &e.nodes)?;
        let spec = pencil_eigs(&e.k_tilde, &s_hat, tol::REL_RANK)?;
        Ok(spec.lambda_max())
    })();
    match local {
        Ok(tau) => Ok(clamp_tau(tau)),
        // Degenerate local models cannot certify anything tighter than the
        // universal bound tau <= 1.
        Err(_) => Ok(1.0),
    }
}

/// Batch driver over a chosen route. `subset` limits the computed ids
/// (None = all elements); an explicitly empty subset is an error. Output is
/// deterministic and ordered by element id.
pub fn leverage_table(
    assembly: &Assembly,
    method: LeverageMethod,
    subset: Option<&[usize]>,
) -> Result<LeverageTable> {
    if let Some(ids) = subset {
        if ids.is_empty() {
            return Err(Error::Domain("requested element subset is empty"));
        }
        if ids.iter().any(|&e| e >= assembly.m()) {
            return Err(Error::Domain("unknown element id in subset"));
        }
    }

    if method == LeverageMethod::ExactQr {
        let table = leverage_exact_qr(assembly)?;
        return Ok(match subset {
            None => table,
            Some(ids) => {
                let mut ids: Vec<usize> = ids.to_vec();
                ids.sort_unstable();
                ids.dedup();
                LeverageTable::from_records(
                    ids.iter().map(|&e| table.records[e]).collect(),
                )
            }
        });
    }

    let ctx = LeverageContext::prepare(assembly, method)?;
    let ids: Vec<usize> = match subset {
        None => (0..assembly.m()).collect(),
        Some(ids) => {
            let mut ids: Vec<usize> = ids.to_vec();
            ids.sort_unstable();
            ids.dedup();
            ids
        }
    };
    let mut records = Vec::with_capacity(ids.len());
    for &e in &ids {
        let tau = ctx.leverage_of(e, method).map_err(|err| Error::Model {
            element: Some(e),
            reason: alloc::format!("leverage failed: {err}"),
        })?;
        records.push(LeverageRecord { element_id: e, tau, method });
    }
    Ok(LeverageTable::from_records(records))
}

#[inline]
fn clamp_tau(tau: f64) -> f64 {
    tau.clamp(tol::TAU_FLOOR, 1.0)
}

/// Spectrum accessor used by tests that need the whole local pencil.
pub fn element_pencil(assembly: &Assembly, element: usize) -> Result<PencilSpectrum> {
    let k = assembly.assemble();
    let e = assembly.element(element)?;
    let s = schur_complement(&k, &e.nodes)?;
    pencil_eigs(&e.k_tilde, &s, tol::REL_RANK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::Mat;
    use crate::model::ElementMatrix;
    use alloc::vec;

    fn ones_basis(n: usize) -> Mat {
        let mut m = Mat::zeros(n, 1);
        for i in 0..n {
            m.set(i, 0, 1.0);
        }
        m
    }

    fn edge(id: usize, u: usize, v: usize, w: f64) -> ElementMatrix {
        let k = SymmetricDense::from_lower_of(2, &[w, -w, -w, w]);
        ElementMatrix::new(id, vec![u.min(v), u.max(v)], k)
    }

    fn cycle(n: usize) -> Assembly {
        let mut elements: Vec<ElementMatrix> =
            (0..n - 1).map(|i| edge(i, i, i + 1, 1.0)).collect();
        elements.push(edge(n - 1, 0, n - 1, 1.0));
        Assembly::new(n, elements, ones_basis(n), 1, 1).unwrap()
    }

    fn path(n: usize) -> Assembly {
        let elements: Vec<ElementMatrix> = (0..n - 1).map(|i| edge(i, i, i + 1, 1.0)).collect();
        Assembly::new(n, elements, ones_basis(n), 1, 1).unwrap()
    }

    #[test]
    fn effective_stiffness_cycle_edge() {
        let s = effective_stiffness(&cycle(3), 0).unwrap().matrix;
        assert!((s.get(0, 0) - 1.5).abs() < 1e-12);
        assert!((s.get(0, 1) + 1.5).abs() < 1e-12);
    }

    #[test]
    fn effective_stiffness_single_element_is_k_tilde() {
        let e = edge(0, 0, 1, 2.0);
        let kt = e.k_tilde.clone();
        let a = Assembly::new(2, vec![e], ones_basis(2), 1, 1).unwrap();
        let s = effective_stiffness(&a, 0).unwrap().matrix;
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.get(i, j) - kt.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn schur_leverage_cycle_is_two_thirds() {
        let a = cycle(3);
        for e in 0..3 {
            let tau = leverage_exact_schur(&a, e).unwrap();
            assert!((tau - 2.0 / 3.0).abs() < 1e-10, "edge {e}: {tau}");
        }
    }

    #[test]
    fn schur_leverage_bridge_is_one() {
        let a = path(3);
        for e in 0..2 {
            let tau = leverage_exact_schur(&a, e).unwrap();
            assert!((tau - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn schur_leverage_single_element_is_one() {
        let e = edge(0, 0, 1, 3.0);
        let a = Assembly::new(2, vec![e], ones_basis(2), 1, 1).unwrap();
        assert!((leverage_exact_schur(&a, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qr_route_cycle_totals() {
        let mut a = cycle(3);
        a.factor_all(tol::REL_RANK).unwrap();
        let table = leverage_exact_qr(&a).unwrap();
        assert_eq!(table.len(), 3);
        for rec in &table.records {
            assert!((rec.tau - 2.0 / 3.0).abs() < 1e-10);
        }
        assert!((table.total - 2.0).abs() < 1e-10);
    }

    #[test]
    fn qr_route_path_gives_bridges() {
        let mut a = path(3);
        a.factor_all(tol::REL_RANK).unwrap();
        let table = leverage_exact_qr(&a).unwrap();
        for rec in &table.records {
            assert!((rec.tau - 1.0).abs() < 1e-10);
        }
        assert!((table.total - 2.0).abs() < 1e-10);
    }

    #[test]
    fn qr_route_single_element() {
        let e = edge(0, 0, 1, 2.5);
        let mut a = Assembly::new(2, vec![e], ones_basis(2), 1, 1).unwrap();
        a.factor_all(tol::REL_RANK).unwrap();
        let table = leverage_exact_qr(&a).unwrap();
        assert!((table.records[0].tau - 1.0).abs() < 1e-12);
    }

    #[test]
    fn removal_route_cycle() {
        let a = cycle(3);
        let tau = leverage_via_removal(&a, 1).unwrap();
        assert!((tau - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn removal_route_bridge_branch() {
        let a = path(3);
        assert_eq!(leverage_via_removal(&a, 0).unwrap(), 1.0);
    }

    #[test]
    fn removal_matches_schur_on_duplicated_element() {
        let elements = vec![edge(0, 0, 1, 1.0), edge(1, 0, 1, 1.0), edge(2, 1, 2, 1.0)];
        let a = Assembly::new(3, elements, ones_basis(3), 1, 1).unwrap();
        for e in 0..3 {
            let by_removal = leverage_via_removal(&a, e).unwrap();
            let by_schur = leverage_exact_schur(&a, e).unwrap();
            assert!(
                (by_removal - by_schur).abs() < 1e-8,
                "element {e}: {by_removal} vs {by_schur}"
            );
        }
    }

    #[test]
    fn local_radius_reaching_everything_is_exact() {
        let a = cycle(3);
        let g = a.rigidity_graph(1).unwrap();
        let tau = leverage_local(&a, &g, 0, 1).unwrap();
        assert!((tau - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn local_six_cycle_radius_one_is_loose_bridge() {
        // Ball of radius 1 around an edge of the 6-cycle is a 3-edge path,
        // where the edge is a local bridge: bound 1 vs exact 5/6.
        let a = cycle(6);
        let g = a.rigidity_graph(1).unwrap();
        let local = leverage_local(&a, &g, 0, 1).unwrap();
        assert_eq!(local, 1.0);
        let exact = leverage_exact_schur(&a, 0).unwrap();
        assert!((exact - 5.0 / 6.0).abs() < 1e-10);
        assert!(local >= exact - 1e-10);
    }

    #[test]
    fn local_monotone_in_radius_on_six_cycle() {
        let a = cycle(6);
        let g = a.rigidity_graph(1).unwrap();
        for e in 0..6 {
            let exact = leverage_exact_schur(&a, e).unwrap();
            let mut prev = f64::INFINITY;
            for radius in 1..=3 {
                let tau = leverage_local(&a, &g, e, radius).unwrap();
                assert!(tau <= prev + 1e-10, "radius {radius} increased the bound");
                assert!(tau >= exact - 1e-10);
                prev = tau;
            }
        }
    }

    #[test]
    fn table_driver_qr_and_subset() {
        let mut a = cycle(3);
        a.factor_all(tol::REL_RANK).unwrap();
        let table = leverage_table(&a, LeverageMethod::ExactQr, None).unwrap();
        assert!((table.total - 2.0).abs() < 1e-10);
        let part = leverage_table(&a, LeverageMethod::ExactQr, Some(&[2, 0])).unwrap();
        assert_eq!(part.len(), 2);
        assert_eq!(part.records[0].element_id, 0);
        assert!(leverage_table(&a, LeverageMethod::ExactQr, Some(&[])).is_err());
    }

    #[test]
    fn table_driver_local_six_cycle() {
        let a = cycle(6);
        let table =
            leverage_table(&a, LeverageMethod::Local { radius: 1 }, None).unwrap();
        assert_eq!(table.len(), 6);
        for rec in &table.records {
            assert_eq!(rec.tau, 1.0);
        }
        assert!((table.total - 6.0).abs() < 1e-12);
        // versus the exact total 5
        let exact = leverage_table(&a, LeverageMethod::ExactSchur, None).unwrap();
        assert!(table.total >= exact.total);
        assert!((exact.total - 5.0).abs() < 1e-8);
    }

    #[test]
    fn global_scaling_leaves_leverages_unchanged() {
        let elements = vec![edge(0, 0, 1, 1.0), edge(1, 1, 2, 1.0), edge(2, 0, 2, 1.0)];
        let scaled: Vec<ElementMatrix> = elements
            .iter()
            .map(|e| {
                ElementMatrix::new(e.id, e.nodes.clone(), e.k_tilde.scaled(37.5))
            })
            .collect();
        let a = Assembly::new(3, elements, ones_basis(3), 1, 1).unwrap();
        let b = Assembly::new(3, scaled, ones_basis(3), 1, 1).unwrap();
        for e in 0..3 {
            let ta = leverage_exact_schur(&a, e).unwrap();
            let tb = leverage_exact_schur(&b, e).unwrap();
            assert!((ta - tb).abs() < 1e-10);
        }
    }
}
