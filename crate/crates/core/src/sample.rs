//! Leverage-weighted element sampling with replacement, Chernoff-based
//! sample sizing, and assembly of the sampled preconditioner.

use alloc::vec;
use alloc::vec::Vec;

use crate::chol;
use crate::error::Error;
use crate::leverage::LeverageTable;
use crate::model::Assembly;
use crate::rng::Xoshiro256StarStar;
use crate::sparse::SparseSymmetric;
use crate::Result;

/// Which sample-size bound applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingMode {
    /// Exact leverages.
    Exact,
    /// Multiplicative leverage approximations with quality factor `beta`
    /// (`beta = (1 + eps)/(1 - eps)` for `(1 + eps)`-approximations); the
    /// bound grows by `beta`.
    Approx { beta: f64 },
    /// Leverage upper bounds; the bound uses the (larger) bound total.
    Upper,
}

impl SamplingMode {
    pub fn tag(&self) -> &'static str {
        match self {
            SamplingMode::Exact => "exact",
            SamplingMode::Approx { .. } => "approx",
            SamplingMode::Upper => "upper",
        }
    }
}

/// The concentration constant
/// `C(k) = (k + 1) / (2 k ln(2k/(k + 1)) - k + 1)`, which diverges as
/// `k -> 1+` and tends to `1/(2 ln 2 - 1)` as `k -> inf`.
pub fn chernoff_constant(kappa_max: f64) -> Result<f64> {
    if !(kappa_max > 1.0) || !kappa_max.is_finite() {
        return Err(Error::Domain("kappa_max must be finite and exceed 1"));
    }
    let num = kappa_max + 1.0;
    let den = 2.0 * kappa_max * libm::log(2.0 * kappa_max / (kappa_max + 1.0)) - kappa_max + 1.0;
    Ok(num / den)
}

/// Number of samples guaranteeing condition number `kappa_max` with failure
/// probability `delta`: the ceiling of
/// `C(kappa_max) * total_leverage * ln(2 (n - d) / delta)`, times `beta` in
/// approximate mode. In upper mode callers pass the bound total.
pub fn sample_size(
    kappa_max: f64,
    delta: f64,
    total_leverage: f64,
    n: usize,
    d: usize,
    mode: SamplingMode,
) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain("delta must lie in (0, 1)"));
    }
    if !(total_leverage > 0.0) || !total_leverage.is_finite() {
        return Err(Error::Domain("total leverage must be positive"));
    }
    if n <= d {
        return Err(Error::Domain("n must exceed d"));
    }
    let c = chernoff_constant(kappa_max)?;
    let mut bound = c * total_leverage * libm::log(2.0 * (n - d) as f64 / delta);
    if let SamplingMode::Approx { beta } = mode {
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(Error::Domain("beta must be at least 1"));
        }
        bound *= beta;
    }
    Ok((libm::ceil(bound) as usize).max(1))
}

/// The heuristic count `ceil(t * ln t)` used for desk experiments in place
/// of the full bound.
pub fn heuristic_sample_size(total_leverage: f64) -> Result<usize> {
    if !(total_leverage > 0.0) || !total_leverage.is_finite() {
        return Err(Error::Domain("total leverage must be positive"));
    }
    Ok((libm::ceil(total_leverage * libm::log(total_leverage)) as usize).max(1))
}

/// A fully specified sampling run: normalized probabilities, the target
/// condition number and failure probability, the sample count, and the seed.
#[derive(Debug, Clone)]
pub struct SamplingPlan {
    /// Probability per element id; strictly positive, sums to one.
    pub probabilities: Vec<f64>,
    pub kappa_max: f64,
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub mode: SamplingMode,
}

/// Build a plan from a full leverage table: `p_e = tau_e / total`, sample
/// count from the mode's bound.
pub fn make_plan(
    table: &LeverageTable,
    n: usize,
    d: usize,
    kappa_max: f64,
    delta: f64,
    seed: u64,
    mode: SamplingMode,
) -> Result<SamplingPlan> {
    let samples = sample_size(kappa_max, delta, table.total, n, d, mode)?;
    make_plan_with_samples(table, kappa_max, delta, seed, mode, samples)
}

/// As `make_plan` with an explicit sample count (override or heuristic).
pub fn make_plan_with_samples(
    table: &LeverageTable,
    kappa_max: f64,
    delta: f64,
    seed: u64,
    mode: SamplingMode,
    samples: usize,
) -> Result<SamplingPlan> {
    if table.is_empty() {
        return Err(Error::Domain("leverage table is empty"));
    }
    if !(table.total > 0.0) {
        return Err(Error::Domain("leverage total must be positive"));
    }
    if samples == 0 {
        return Err(Error::Domain("sample count must be positive"));
    }
    let m = table.len();
    let mut probabilities = vec![0.0; m];
    for rec in &table.records {
        if rec.element_id >= m {
            return Err(Error::Domain("leverage table must cover elements 0..m"));
        }
        if probabilities[rec.element_id] != 0.0 {
            return Err(Error::Domain("duplicate element id in leverage table"));
        }
        if !(rec.tau > 0.0) {
            return Err(Error::Domain("leverages must be strictly positive"));
        }
        probabilities[rec.element_id] = rec.tau / table.total;
    }
    Ok(SamplingPlan { probabilities, kappa_max, delta, samples, seed, mode })
}

/// Walker/Vose alias table for O(1) categorical draws.
pub struct AliasTable {
    threshold: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    pub fn new(probabilities: &[f64]) -> Self {
        let n = probabilities.len();
        let mut threshold: Vec<f64> = probabilities.iter().map(|p| p * n as f64).collect();
        let mut alias: Vec<usize> = (0..n).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        // Ascending index order on both worklists keeps construction
        // deterministic.
        for (i, t) in threshold.iter().enumerate() {
            if *t < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            alias[s] = l;
            threshold[l] -= 1.0 - threshold[s];
            if threshold[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers (roundoff) saturate to certain acceptance.
        for &s in &small {
            threshold[s] = 1.0;
        }
        for &l in &large {
            threshold[l] = 1.0;
        }
        AliasTable { threshold, alias }
    }

    /// Draw from two uniforms: the first picks the slot, the second accepts
    /// or redirects to the alias.
    #[inline]
    pub fn pick(&self, u_slot: f64, u_accept: f64) -> usize {
        let n = self.threshold.len();
        let slot = ((u_slot * n as f64) as usize).min(n - 1);
        if u_accept < self.threshold[slot] {
            slot
        } else {
            self.alias[slot]
        }
    }
}

/// The `samples` element ids drawn by the plan, in draw order. The stream is
/// xoshiro256** seeded via splitmix64 from the plan seed, consuming exactly
/// two doubles per draw: slot then acceptance.
pub fn draw_sequence(plan: &SamplingPlan) -> Vec<usize> {
    let table = AliasTable::new(&plan.probabilities);
    let mut rng = Xoshiro256StarStar::from_seed(plan.seed);
    let mut out = Vec::with_capacity(plan.samples);
    for _ in 0..plan.samples {
        let u_slot = rng.next_f64();
        let u_accept = rng.next_f64();
        out.push(table.pick(u_slot, u_accept));
    }
    out
}

/// The drawn multiset as (element id, count), ascending ids, counts summing
/// to the plan's sample count.
pub fn draw(plan: &SamplingPlan) -> Vec<(usize, u64)> {
    let mut counts = vec![0u64; plan.probabilities.len()];
    for id in draw_sequence(plan) {
        counts[id] += 1;
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(i, &c)| (i, c))
        .collect()
}

/// The sampled preconditioner `P = sum_e (count_e / (M p_e)) K_e`, with
/// duplicates merged into one coefficient per element.
#[derive(Debug, Clone)]
pub struct SampledPreconditioner {
    /// (element id, accumulated coefficient), ascending ids.
    pub element_coeffs: Vec<(usize, f64)>,
    pub matrix: SparseSymmetric,
    pub distinct_count: usize,
    /// Whether the factorization found rank exactly `n - d`.
    pub rank_ok: bool,
}

/// Assemble the preconditioner from a drawn multiset and report whether it
/// kept full rank (by attempting the solver's factorization with the
/// model's null-space dimension).
pub fn build_preconditioner(
    assembly: &Assembly,
    plan: &SamplingPlan,
    multiset: &[(usize, u64)],
) -> Result<SampledPreconditioner> {
    if plan.probabilities.len() != assembly.m() {
        return Err(Error::Domain("plan does not cover the assembly's elements"));
    }
    let m_total: u64 = multiset.iter().map(|&(_, c)| c).sum();
    if m_total == 0 {
        return Err(Error::Domain("empty multiset"));
    }

    let mut element_coeffs = Vec::with_capacity(multiset.len());
    let mut triplets = Vec::new();
    for &(id, count) in multiset {
        let e = assembly.element(id)?;
        let p = plan.probabilities[id];
        let coeff = count as f64 / (m_total as f64 * p);
        element_coeffs.push((id, coeff));
        let ne = e.nodes.len();
        for li in 0..ne {
            for lj in 0..=li {
                triplets.push((e.nodes[li], e.nodes[lj], coeff * e.k_tilde.get(li, lj)));
            }
        }
    }
    let matrix = SparseSymmetric::from_triplets(assembly.n(), &triplets)?;
    let expected_rank = assembly.n() - assembly.d();
    let rank_ok = match chol::factor(&matrix, assembly.d()) {
        Ok(f) => f.detected_rank == expected_rank,
        Err(_) => false,
    };
    Ok(SampledPreconditioner {
        element_coeffs,
        matrix,
        distinct_count: multiset.len(),
        rank_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{Mat, SymmetricDense};
    use crate::leverage::{LeverageMethod, LeverageRecord};
    use crate::model::ElementMatrix;

    fn table_from(taus: &[f64]) -> LeverageTable {
        LeverageTable::from_records(
            taus.iter()
                .enumerate()
                .map(|(i, &tau)| LeverageRecord {
                    element_id: i,
                    tau,
                    method: LeverageMethod::ExactSchur,
                })
                .collect(),
        )
    }

    #[test]
    fn chernoff_reference_values() {
        // C(3) = 4 / (6 ln(3/2) - 2); the decimal is frozen from evaluating
        // the formula in double precision.
        let c3 = chernoff_constant(3.0).unwrap();
        assert!((c3 - 9.2423).abs() < 1e-3, "C(3) = {c3}");
        // Large-kappa limit 1/(2 ln 2 - 1).
        let c_inf = chernoff_constant(1e6).unwrap();
        let limit = 1.0 / (2.0 * libm::log(2.0) - 1.0);
        assert!((c_inf - limit).abs() / limit < 0.01, "C(1e6) = {c_inf}");
        assert!((limit - 2.5887).abs() < 1e-3);
        // Divergence near 1.
        assert!(chernoff_constant(1.0 + 1e-9).unwrap() > 1e6);
        assert!(chernoff_constant(1.0).is_err());
        assert!(chernoff_constant(0.5).is_err());
    }

    #[test]
    fn sample_size_reference_case() {
        // kappa = 3, delta = 1/2, Laplacian with n = 101, d = 1, total 100:
        // ceil(C(3) * 100 * ln 400); frozen from the double-precision product,
        // with +-1 slack on the ceiling.
        let m = sample_size(3.0, 0.5, 100.0, 101, 1, SamplingMode::Exact).unwrap();
        assert!((5537..=5539).contains(&m), "M = {m}");
    }

    #[test]
    fn sample_size_upper_mode_scales_linearly() {
        let base = chernoff_constant(4.0).unwrap() * 10.0 * libm::log(2.0 * 20.0 / 0.2);
        let m1 = sample_size(4.0, 0.2, 10.0, 21, 1, SamplingMode::Exact).unwrap();
        let m2 = sample_size(4.0, 0.2, 20.0, 21, 1, SamplingMode::Upper).unwrap();
        assert_eq!(m1, libm::ceil(base) as usize);
        assert_eq!(m2, libm::ceil(2.0 * base) as usize);
    }

    #[test]
    fn sample_size_beta_one_degenerates_to_exact() {
        let a = sample_size(9.0, 0.1, 50.0, 100, 1, SamplingMode::Exact).unwrap();
        let b = sample_size(9.0, 0.1, 50.0, 100, 1, SamplingMode::Approx { beta: 1.0 }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn plan_probabilities_normalize() {
        let table = table_from(&[2.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]);
        let plan = make_plan(&table, 3, 1, 9.0, 0.1, 7, SamplingMode::Exact).unwrap();
        let sum: f64 = plan.probabilities.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for p in &plan.probabilities {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_leverages_give_uniform_probabilities() {
        let table = table_from(&[0.4; 5]);
        let plan = make_plan_with_samples(&table, 9.0, 0.1, 7, SamplingMode::Exact, 100).unwrap();
        for p in &plan.probabilities {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn floored_leverage_keeps_probability_positive() {
        let table = table_from(&[1e-14, 1.0]);
        let plan = make_plan_with_samples(&table, 9.0, 0.1, 7, SamplingMode::Exact, 10).unwrap();
        assert!(plan.probabilities[0] > 0.0);
    }

    #[test]
    fn draws_are_deterministic_and_sum() {
        let table = table_from(&[0.3, 0.7, 1.0]);
        let plan = make_plan_with_samples(&table, 9.0, 0.1, 99, SamplingMode::Exact, 1000).unwrap();
        let a = draw(&plan);
        let b = draw(&plan);
        assert_eq!(a, b);
        let total: u64 = a.iter().map(|&(_, c)| c).sum();
        assert_eq!(total, 1000);
    }

    #[test]
    fn single_element_plan_draws_only_it() {
        let table = table_from(&[1.0]);
        let plan = make_plan_with_samples(&table, 9.0, 0.1, 3, SamplingMode::Exact, 50).unwrap();
        let ms = draw(&plan);
        assert_eq!(ms, alloc::vec![(0usize, 50u64)]);
    }

    #[test]
    fn binomial_concentration_with_pinned_generator() {
        // m = 2, p = (1/2, 1/2), M = 1e6: both counts within 5000 of 5e5
        // (about ten standard deviations).
        let table = table_from(&[0.5, 0.5]);
        let plan =
            make_plan_with_samples(&table, 9.0, 0.1, 12345, SamplingMode::Exact, 1_000_000)
                .unwrap();
        let ms = draw(&plan);
        for &(_, count) in &ms {
            assert!((count as i64 - 500_000).abs() < 5_000, "count {count}");
        }
    }

    fn ones_basis(n: usize) -> Mat {
        let mut m = Mat::zeros(n, 1);
        for i in 0..n {
            m.set(i, 0, 1.0);
        }
        m
    }

    fn edge(id: usize, u: usize, v: usize, w: f64) -> ElementMatrix {
        let k = SymmetricDense::from_lower_of(2, &[w, -w, -w, w]);
        ElementMatrix::new(id, alloc::vec![u.min(v), u.max(v)], k)
    }

    #[test]
    fn uniform_coefficients_reproduce_k() {
        // Sampling every element exactly once under uniform probabilities
        // with M = m gives coefficients one, i.e. P = K.
        let elements = alloc::vec![edge(0, 0, 1, 1.0), edge(1, 1, 2, 1.0), edge(2, 0, 2, 1.0)];
        let a = Assembly::new(3, elements, ones_basis(3), 1, 1).unwrap();
        let table = table_from(&[0.5, 0.5, 0.5]);
        let plan = make_plan_with_samples(&table, 9.0, 0.1, 1, SamplingMode::Exact, 3).unwrap();
        let ms = alloc::vec![(0usize, 1u64), (1, 1), (2, 1)];
        let p = build_preconditioner(&a, &plan, &ms).unwrap();
        assert_eq!(p.distinct_count, 3);
        assert!(p.rank_ok);
        let k = a.assemble();
        assert_eq!(p.matrix.entries(), k.entries());
    }

    #[test]
    fn single_element_preconditioner_is_that_element() {
        let e = edge(0, 0, 1, 2.0);
        let a = Assembly::new(2, alloc::vec![e], ones_basis(2), 1, 1).unwrap();
        let table = table_from(&[1.0]);
        let plan = make_plan_with_samples(&table, 9.0, 0.1, 5, SamplingMode::Exact, 17).unwrap();
        let p = build_preconditioner(&a, &plan, &draw(&plan)).unwrap();
        let k = a.assemble();
        assert_eq!(p.matrix.entries(), k.entries());
    }

    #[test]
    fn undersampled_preconditioner_reports_rank_loss() {
        // Only one edge of a path sampled: the assembled matrix misses a
        // node entirely, so the rank check must fail.
        let elements = alloc::vec![edge(0, 0, 1, 1.0), edge(1, 1, 2, 1.0)];
        let a = Assembly::new(3, elements, ones_basis(3), 1, 1).unwrap();
        let table = table_from(&[1.0, 1.0]);
        let plan = make_plan_with_samples(&table, 9.0, 0.1, 5, SamplingMode::Exact, 4).unwrap();
        let p = build_preconditioner(&a, &plan, &[(0, 4)]).unwrap();
        assert!(!p.rank_ok);
        assert_eq!(p.distinct_count, 1);
    }

    #[test]
    fn preconditioner_pattern_inside_k() {
        let elements = alloc::vec![edge(0, 0, 1, 1.0), edge(1, 1, 2, 1.0), edge(2, 0, 2, 1.0)];
        let a = Assembly::new(3, elements, ones_basis(3), 1, 1).unwrap();
        let table = table_from(&[0.5, 0.5, 0.5]);
        let plan = make_plan_with_samples(&table, 9.0, 0.1, 2, SamplingMode::Exact, 6).unwrap();
        let p = build_preconditioner(&a, &plan, &draw(&plan)).unwrap();
        assert!(p.matrix.pattern_subset_of(&a.assemble()));
    }
}
