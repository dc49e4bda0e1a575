//! Scheme for items that may join at most `gamma` tests.
//!
//! The tree has height `gamma_prime <= gamma`. Level 1 has `n / M` nodes of
//! `M` items, each tested alone. Every deeper level splits each node into
//! `b` children and drops each node into one random test of a single
//! sequence. The leaves (singletons) spend the remaining budget of
//! `gamma - gamma_prime + 1` tests in independent sequences. The decoder walks
//! down from the positive level-1 nodes, only ever touching children of
//! nodes whose test was positive.

use alloc::format;
use alloc::vec::Vec;

use crate::design::{HashMode, Placement};
use crate::error::{Error, Result};
use crate::key::{RandomnessKey, Stream};
use crate::layout::{Design, OutcomeVector, TestLayout};
use crate::math::{ceil_tol, is_pow2, log2_exact};
use crate::report::{DecodeReport, ReadTracker};

/// Smallest integer constant admitted for `C` (`C >= e^2`).
pub const DEFAULT_C_CONST: f64 = 8.0;

/// `beta_n = 1 / (log2 n)^2`.
pub fn default_beta_n(n: usize) -> f64 {
    let lg = libm::log2(n as f64);
    1.0 / (lg * lg)
}

/// Sparsity exponent `theta = ln k / ln n`.
pub fn theta(n: usize, k: usize) -> f64 {
    libm::log(k as f64) / libm::log(n as f64)
}

/// Test-count exponent for tree height `gamma_prime`:
/// `max{(1-theta)/g', theta/(g-g'+1) + (1-theta)/(g'(g-g'+1))}`.
pub fn objective(gamma: u32, gamma_prime: u32, theta: f64) -> f64 {
    let g = gamma as f64;
    let gp = gamma_prime as f64;
    let tail = g - gp + 1.0;
    let upper = (1.0 - theta) / gp;
    let lower = theta / tail + (1.0 - theta) / (gp * tail);
    upper.max(lower)
}

/// Height minimizing [`objective`]. The objective is convex in `gamma_prime`
/// with its continuous minimum at `(1 - theta) * gamma`, so only the two
/// integers around that point (or 3, when it lies below 3) are compared.
/// Ties go to the smaller height.
pub fn select_gamma_prime(gamma: u32, theta: f64) -> Result<u32> {
    if gamma < 3 {
        return Err(Error::invalid("gamma", format!("need gamma >= 3, got {gamma}")));
    }
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::invalid("theta", format!("{theta} must lie in [0, 1)")));
    }
    let x = (1.0 - theta) * gamma as f64;
    if x < 3.0 {
        return Ok(3);
    }
    let lo = (libm::floor(x) as u32).clamp(3, gamma);
    let hi = (libm::ceil(x) as u32).clamp(3, gamma);
    if objective(gamma, hi, theta) < objective(gamma, lo, theta) {
        Ok(hi)
    } else {
        Ok(lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaParams {
    pub n: usize,
    pub k: usize,
    pub gamma: u32,
    pub gamma_prime: u32,
    /// Fan-out `b` below level 1 (a power of two).
    pub branching: usize,
    /// Size `M = b^(gamma_prime - 1)` of a level-1 node.
    pub level1_node_size: usize,
    pub t_len: usize,
    pub t_len_prime: usize,
    pub t_len_dprime: usize,
    pub c_const: f64,
    pub beta_n: f64,
}

impl GammaParams {
    pub fn level1_tests(&self) -> usize {
        self.n / self.level1_node_size
    }

    /// Number of independent sequences at the leaf level.
    pub fn final_reps(&self) -> u32 {
        self.gamma - self.gamma_prime + 1
    }

    pub fn nodes_at(&self, level: u32) -> usize {
        self.level1_tests() * self.branching.pow(level - 1)
    }

    pub fn node_size_at(&self, level: u32) -> usize {
        self.level1_node_size / self.branching.pow(level - 1)
    }

    /// `n/M + (g'-3) T_len + T'_len + (g-g'+1) T''_len`.
    pub fn total_tests(&self) -> usize {
        self.level1_tests()
            + (self.gamma_prime as usize - 3) * self.t_len
            + self.t_len_prime
            + self.final_reps() as usize * self.t_len_dprime
    }
}

/// `log2 M` for height `gamma_prime`.
fn level1_exp(n: usize, k: usize, gamma_prime: u32) -> u32 {
    (log2_exact(n) - log2_exact(k)).div_ceil(gamma_prime) * (gamma_prime - 1)
}

/// Parameter choice for `n` items (power of two), `k` defectives and budget `gamma`.
///
/// `gamma_prime` defaults to [`select_gamma_prime`] at `theta = ln k / ln n`,
/// lowered while `M` would exceed `n`.
/// Sequence lengths:
/// `b = 2^ceil(log2(n/k) / g')`, `M = b^(g'-1)`, `T_len = ceil(C k b)`,
/// `T'_len = g' k b`, and
/// `T''_len = ceil(k (k/beta)^(1/(g-g'+1)) (n/k)^(1/(g'(g-g'+1))))`.
pub fn gamma_params(
    n: usize,
    k: usize,
    gamma: u32,
    gamma_prime: Option<u32>,
    beta_n: f64,
    c_const: f64,
) -> Result<GammaParams> {
    if !is_pow2(n) || !is_pow2(k) || k >= n {
        return Err(Error::invalid(
            "instance",
            format!("need powers of two with k < n, got n = {n}, k = {k}"),
        ));
    }
    if gamma < 3 {
        return Err(Error::invalid("gamma", format!("need gamma >= 3, got {gamma}")));
    }
    if !(beta_n > 0.0 && beta_n <= 1.0) {
        return Err(Error::invalid("beta_n", format!("{beta_n} must lie in (0, 1]")));
    }
    let e2 = libm::exp(2.0);
    if !(c_const >= e2) {
        return Err(Error::invalid("c_const", format!("{c_const} is below e^2 = {e2:.4}")));
    }
    let gp = match gamma_prime {
        Some(gp) if !(3..=gamma).contains(&gp) => {
            return Err(Error::invalid(
                "gamma_prime",
                format!("{gp} must lie in 3..={gamma}"),
            ))
        }
        Some(gp) => gp,
        None => {
            // Rounding b up to a power of two can push M = b^(g'-1) past n;
            // step down to the tallest tree that still fits.
            let mut gp = select_gamma_prime(gamma, theta(n, k))?;
            while gp > 3 && level1_exp(n, k, gp) > log2_exact(n) {
                gp -= 1;
            }
            gp
        }
    };
    let log_ratio = log2_exact(n) - log2_exact(k);
    let branch_exp = log_ratio.div_ceil(gp);
    let m_exp = branch_exp * (gp - 1);
    if m_exp > log2_exact(n) {
        return Err(Error::invalid(
            "gamma_prime",
            format!("level-1 node size 2^{m_exp} exceeds n = {n}"),
        ));
    }
    let b = 1usize << branch_exp;
    let tail = (gamma - gp + 1) as f64;
    let kf = k as f64;
    let ratio = (n / k) as f64;
    let t_len = ceil_tol(c_const * kf * b as f64) as usize;
    let t_len_prime = gp as usize * k * b;
    let t_len_dprime =
        ceil_tol(kf * libm::pow(kf / beta_n, 1.0 / tail) * libm::pow(ratio, 1.0 / (gp as f64 * tail))) as usize;
    Ok(GammaParams {
        n,
        k,
        gamma,
        gamma_prime: gp,
        branching: b,
        level1_node_size: 1 << m_exp,
        t_len: t_len.max(1),
        t_len_prime: t_len_prime.max(1),
        t_len_dprime: t_len_dprime.max(1),
        c_const,
        beta_n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaDesign {
    params: GammaParams,
    layout: TestLayout,
    hash_mode: HashMode,
}

impl GammaDesign {
    pub fn params(&self) -> &GammaParams {
        &self.params
    }

    pub fn hash_mode(&self) -> HashMode {
        self.hash_mode
    }
}

impl Design for GammaDesign {
    fn layout(&self) -> &TestLayout {
        &self.layout
    }
}

/// Lays out all levels. Segment order: level 1, levels `2..g'`, then the
/// `g - g' + 1` leaf sequences.
pub fn build_gamma_design(params: &GammaParams, key: &RandomnessKey, hash_mode: HashMode) -> Result<GammaDesign> {
    let p = params;
    let gp = p.gamma_prime;
    let kwise = p.gamma as usize + 1;
    let mut layout = TestLayout::new(p.n);
    layout.push(
        1,
        0,
        p.level1_node_size,
        Placement::Identity {
            num_nodes: p.level1_tests(),
        },
    )?;
    for level in 2..gp {
        let t = if level == gp - 1 { p.t_len_prime } else { p.t_len };
        let k = key.with_stream(Stream::placement(level, 0));
        let placement = hash_mode.place_independent(p.nodes_at(level), t, kwise, &k)?;
        layout.push(level, 0, p.node_size_at(level), placement)?;
    }
    for rep in 0..p.final_reps() {
        let k = key.with_stream(Stream::placement(gp, rep));
        let placement = hash_mode.place_independent(p.n, p.t_len_dprime, kwise, &k)?;
        layout.push(gp, rep, 1, placement)?;
    }
    Ok(GammaDesign {
        params: p.clone(),
        layout,
        hash_mode,
    })
}

/// Tree descent. Reads every level-1 outcome, then one outcome per candidate
/// node per level, and at the leaves stops at the first negative test.
pub fn decode_gamma(design: &GammaDesign, outcomes: &OutcomeVector) -> Result<DecodeReport> {
    let layout = &design.layout;
    outcomes.check_matches(layout)?;
    let p = &design.params;
    let b = p.branching;
    let mut report = DecodeReport::default();
    let mut reads = ReadTracker::default();

    let top = layout.segment(0);
    let mut candidates = Vec::new();
    for node in 0..p.level1_tests() {
        report.nodes_visited += 1;
        if reads.read(outcomes, top.test_of(node)) {
            candidates.extend(node * b..(node + 1) * b);
        }
    }
    report.peak_candidates = candidates.len();

    for level in 2..p.gamma_prime {
        let seg = layout.segment(level as usize - 1);
        let mut next = Vec::new();
        for &node in &candidates {
            report.nodes_visited += 1;
            if reads.read(outcomes, seg.test_of(node)) {
                next.extend(node * b..(node + 1) * b);
            }
        }
        candidates = next;
        report.peak_candidates = report.peak_candidates.max(candidates.len());
    }

    let leaves = &layout.segments()[p.gamma_prime as usize - 1..];
    let mut estimate = Vec::new();
    for &item in &candidates {
        report.nodes_visited += 1;
        let mut clean = true;
        for seg in leaves {
            if !reads.read(outcomes, seg.test_of(item)) {
                clean = false;
                break;
            }
        }
        if clean {
            estimate.push(item);
        }
    }
    estimate.sort_unstable();
    report.estimate = estimate;
    reads.fill(&mut report);
    report.storage_words = layout.storage_words() + report.peak_candidates;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{NoiseChannel, ProblemInstance};
    use crate::layout::evaluate_design;
    use alloc::vec;

    fn example_params() -> GammaParams {
        gamma_params(1 << 14, 4, 6, Some(4), 1.0 / 16.0, 8.0).unwrap()
    }

    #[test]
    fn gamma_prime_examples() {
        assert_eq!(select_gamma_prime(4, 0.9).unwrap(), 3);
        assert_eq!(select_gamma_prime(10, 0.5).unwrap(), 5);
        assert_eq!(select_gamma_prime(6, 0.3).unwrap(), 4);
        assert!(select_gamma_prime(2, 0.3).is_err());
    }

    #[test]
    fn gamma_prime_agrees_with_brute_force() {
        for gamma in 3..=16u32 {
            for step in 0..100 {
                let theta = step as f64 / 100.0;
                let best = (3..=gamma)
                    .map(|g| objective(gamma, g, theta))
                    .fold(f64::INFINITY, f64::min);
                let chosen = select_gamma_prime(gamma, theta).unwrap();
                assert!(
                    objective(gamma, chosen, theta) <= best + 1e-12,
                    "gamma={gamma} theta={theta}: picked {chosen}"
                );
            }
        }
    }

    #[test]
    fn example_parameters() {
        let p = example_params();
        assert_eq!(p.branching, 8);
        assert_eq!(p.level1_node_size, 512);
        assert_eq!(p.t_len, 256);
        assert_eq!(p.t_len_prime, 128);
        assert_eq!(p.t_len_dprime, 32);
        assert_eq!(p.level1_tests(), 32);
        assert_eq!(p.total_tests(), 512);
        // T''^3 >= k^3 (k / beta) (n/k)^(1/g')
        let lhs = (p.t_len_dprime as f64).powi(3);
        let rhs = 64.0 * 64.0 * 4096f64.powf(0.25);
        assert!(lhs >= rhs * (1.0 - 1e-12));
        let design = build_gamma_design(&p, &RandomnessKey::new(1), HashMode::Full).unwrap();
        assert_eq!(design.num_tests(), 512);
    }

    #[test]
    fn constant_k_uses_full_height() {
        let p = gamma_params(1 << 10, 1, 5, None, 0.01, 8.0).unwrap();
        assert_eq!(p.gamma_prime, 5);
        assert_eq!(p.final_reps(), 1);
    }

    #[test]
    fn automatic_height_steps_down_when_m_overflows() {
        // theta = 0 picks g' = 6, but b = 2^ceil(13/6) = 8 gives M = 2^15 > n.
        assert_eq!(select_gamma_prime(6, 0.0).unwrap(), 6);
        let p = gamma_params(1 << 13, 1, 6, None, 0.01, 8.0).unwrap();
        assert_eq!(p.gamma_prime, 5);
        assert_eq!(p.level1_node_size, 1 << 12);
        assert!(gamma_params(1 << 13, 1, 6, Some(6), 0.01, 8.0).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(gamma_params(1 << 10, 4, 2, None, 0.1, 8.0).is_err());
        assert!(gamma_params(1 << 10, 4, 5, None, 0.0, 8.0).is_err());
        assert!(gamma_params(1 << 10, 4, 5, None, 0.1, 7.0).is_err());
        assert!(gamma_params(1 << 10, 4, 5, Some(6), 0.1, 8.0).is_err());
        assert!(gamma_params(1000, 4, 5, None, 0.1, 8.0).is_err());
        // log2(n/k) = 1 with g' = 6 forces b = 2 and M = 32 > n = 16.
        assert!(gamma_params(16, 8, 6, Some(6), 0.1, 8.0).is_err());
    }

    #[test]
    fn height_three_has_no_middle_band() {
        let p = gamma_params(1 << 10, 4, 5, Some(3), 0.1, 8.0).unwrap();
        let d = build_gamma_design(&p, &RandomnessKey::new(2), HashMode::Full).unwrap();
        let levels: Vec<u32> = d.layout().segments().iter().map(|s| s.level).collect();
        assert_eq!(levels, vec![1, 2, 3, 3, 3]);
        assert_eq!(d.layout().segment(1).len(), p.t_len_prime);
        assert_eq!(d.num_tests(), p.total_tests());
    }

    #[test]
    fn budget_holds_by_enumeration() {
        for gamma in [3, 4, 6, 8] {
            let p = gamma_params(1 << 10, 4, gamma, None, default_beta_n(1 << 10), 8.0).unwrap();
            let d = build_gamma_design(&p, &RandomnessKey::new(gamma as u64), HashMode::Full).unwrap();
            assert_eq!(p.gamma_prime - 1 + p.final_reps(), gamma);
            assert!(d.layout().item_degrees().iter().all(|&deg| deg <= gamma as usize));
        }
    }

    #[test]
    fn empty_set_reads_only_level_one() {
        let p = example_params();
        let d = build_gamma_design(&p, &RandomnessKey::new(9), HashMode::Full).unwrap();
        let inst = ProblemInstance::new(p.n, p.k, vec![]).unwrap();
        let y = evaluate_design(&d, &inst, &NoiseChannel::NOISELESS, &RandomnessKey::new(9)).unwrap();
        let r = decode_gamma(&d, &y).unwrap();
        assert!(r.estimate.is_empty());
        assert_eq!(r.outcomes_read, p.level1_tests());
    }

    #[test]
    fn noiseless_decoding_never_misses_a_defective() {
        let p = example_params();
        for seed in 0..50u64 {
            let key = RandomnessKey::for_trial(5, seed);
            let d = build_gamma_design(&p, &key, HashMode::Full).unwrap();
            let s: Vec<usize> = (0..4).map(|i| (key.draw(i) % p.n as u64) as usize).collect();
            let mut s = s;
            s.sort_unstable();
            s.dedup();
            let inst = ProblemInstance::new(p.n, p.k, s.clone()).unwrap();
            let y = evaluate_design(&d, &inst, &NoiseChannel::NOISELESS, &key).unwrap();
            let r = decode_gamma(&d, &y).unwrap();
            assert!(s.iter().all(|i| r.estimate.contains(i)));
            assert!(r.outcomes_read <= d.num_tests());
            assert!(r.distinct_outcomes_read <= r.outcomes_read);
        }
    }

    #[test]
    fn mismatched_outcomes_are_rejected() {
        let p = example_params();
        let d = build_gamma_design(&p, &RandomnessKey::new(1), HashMode::Full).unwrap();
        let other = gamma_params(1 << 14, 4, 6, Some(5), 1.0 / 16.0, 8.0).unwrap();
        let d2 = build_gamma_design(&other, &RandomnessKey::new(1), HashMode::Full).unwrap();
        let inst = ProblemInstance::new(p.n, p.k, vec![1]).unwrap();
        let y = evaluate_design(&d2, &inst, &NoiseChannel::NOISELESS, &RandomnessKey::new(1)).unwrap();
        assert!(matches!(decode_gamma(&d, &y), Err(Error::LayoutMismatch { .. })));
    }
}
